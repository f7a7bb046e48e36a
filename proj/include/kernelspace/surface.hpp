#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kernelspace/kernel.hpp"

namespace ks {

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(const std::string& msg, Loc loc)
      : std::runtime_error(std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": " + msg), loc(loc) {}
  Loc loc;
};

enum class NK : std::uint8_t {
  Skip, Var, Wild, Dollar, Int, Atom, Rec, List, Op, Hash, Neg, Dot, Apply,
  Body, Local, If, Case, Proc, Fun, Thread, Try, Raise, Choice, Dis, Declare,
};

struct Node;
using NodePtr = std::unique_ptr<Node>;

struct Clause {
  NodePtr pattern;  // case: pattern, dis: guard body, choice: unused
  NodePtr body;
};

//   Rec      text = label, items = values, feats = feature per value (null: positional)
//   List     items
//   Op       text = operator, a, b
//   Hash     items
//   Neg      a
//   Dot      a, b
//   Apply    items = {callee, args...}
//   Body     decls, items = statements
//   Local    a = body
//   If       a = condition, b = then body, c = else body (optional)
//   Case     a = subject, clauses, c = else body (optional)
//   Proc/Fun a = name (Var or Dollar), items = params, b = body, lazy
//   Thread   a = body
//   Try      a = body, b = catch variable, c = handler body
//   Raise    a = body
//   Choice   clauses (bodies only)
//   Dis      clauses (guard, body)
//   Declare  decls, items = statements
struct Node {
  NK kind = NK::Skip;
  Loc loc;
  std::string text;
  std::int64_t num = 0;
  bool lazy = false;
  std::vector<NodePtr> items;
  std::vector<NodePtr> feats;
  std::vector<NodePtr> decls;
  std::vector<Clause> clauses;
  NodePtr a, b, c;
};

// A program is a sequence of Declare blocks; a bare statement sequence is one
// Declare block with no declarations.
std::vector<NodePtr> parse(std::string_view source);

}  // namespace ks
