#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "kernelspace/store.hpp"

namespace ks {

struct Loc {
  int line = 0;
  int col = 0;
};

enum class RefKind : std::uint8_t { Unresolved, Slot, Captured, Global };

struct Ident {
  std::string name;
  Loc loc;
  RefKind kind = RefKind::Unresolved;
  int index = -1;
};

// Kernel statement kinds. Space operations, Choose, ByNeed, NewName, IsDet,
// NewCell and Exchange are applications of built-in procedures.
enum class K : std::uint8_t { Skip, Eq, Lit, Rec, Seq, Local, If, Case, Proc, Apply, Thread, Try, Raise };

//   Eq      ids = {x, y}
//   Lit     ids = {x}, lit
//   Rec     ids = {x, args...} in canonical feature order, lit = label, arity
//   Seq     body
//   Local   ids = declared, body[0]
//   If      ids = {x}, body = {then, else}
//   Case    ids = {x, pattern vars...}, lit/arity pattern (arity < 0: literal), body = {then, else}
//   Proc    ids = {x, params...}, captures, frame_size, body[0]
//   Apply   ids = {p, args...}
//   Thread  body[0]
//   Try     ids = {catch var}, body = {try, handler}
//   Raise   ids = {x}
struct Stmt {
  K kind = K::Skip;
  Loc loc;
  std::vector<Ident> ids;
  Term lit;
  ArityId arity = -1;
  std::vector<std::unique_ptr<Stmt>> body;
  std::vector<Ident> captures;
  int frame_size = 0;
};
using StmtPtr = std::unique_ptr<Stmt>;

StmtPtr make_stmt(K kind, Loc loc = {});
StmtPtr seq(std::vector<StmtPtr> items);

// Kernel syntax that parses and desugars back to an alpha-equivalent statement.
std::string pretty(const Stmt& s);
std::string render_literal(Term t);
std::string quote_atom(const std::string& name);
std::string var_name(const std::string& name);

bool alpha_equivalent(const Stmt& a, const Stmt& b);
std::set<std::string> free_identifiers(const Stmt& s);

}  // namespace ks
