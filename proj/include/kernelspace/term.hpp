#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace ks {

using VarId = std::int64_t;
using SpaceId = std::int32_t;
using ThreadId = std::int64_t;
using PropId = std::int64_t;
using AtomId = std::int64_t;

inline constexpr SpaceId kTopSpace = 0;
inline constexpr SpaceId kNoSpace = -1;

enum class Tag : std::uint8_t {
  Var,
  Int,
  Atom,
  Record,
  Name,
  Proc,
  Builtin,
  Cell,
  Port,
  Space,
};

// A tagged value of the constraint store. Compound payloads (records,
// closures, cells, ...) live in per-VM arenas and are referenced by index.
struct Term {
  Tag tag = Tag::Atom;
  std::int64_t v = 0;

  static constexpr Term var(VarId id) { return {Tag::Var, id}; }
  static constexpr Term integer(std::int64_t i) { return {Tag::Int, i}; }
  static constexpr Term atom(AtomId a) { return {Tag::Atom, a}; }
  static constexpr Term record(std::int64_t r) { return {Tag::Record, r}; }
  static constexpr Term name(std::int64_t n) { return {Tag::Name, n}; }
  static constexpr Term proc(std::int64_t c) { return {Tag::Proc, c}; }
  static constexpr Term builtin(std::int64_t b) { return {Tag::Builtin, b}; }
  static constexpr Term cell(std::int64_t c) { return {Tag::Cell, c}; }
  static constexpr Term port(std::int64_t p) { return {Tag::Port, p}; }
  static constexpr Term space(std::int64_t s) { return {Tag::Space, s}; }

  constexpr bool is_var() const { return tag == Tag::Var; }
  constexpr bool is_int() const { return tag == Tag::Int; }
  constexpr bool is_atom() const { return tag == Tag::Atom; }
  constexpr bool is_record() const { return tag == Tag::Record; }

  friend constexpr bool operator==(Term a, Term b) { return a.tag == b.tag && a.v == b.v; }
  friend constexpr bool operator!=(Term a, Term b) { return !(a == b); }
};

// Process-wide atom interning. Ids are stable and never reused.
AtomId intern(std::string_view s);
std::string atom_name(AtomId a);

// Frequently used atoms.
namespace atoms {
AtomId nil();
AtomId cons();  // '|'
AtomId pair();  // '#'
AtomId true_();
AtomId false_();
AtomId unit();
AtomId failure();
AtomId error();
}  // namespace atoms

inline Term atom_term(std::string_view s) { return Term::atom(intern(s)); }
inline Term bool_term(bool b) { return Term::atom(b ? atoms::true_() : atoms::false_()); }

// Canonical feature order: integers ascending, then atoms lexicographically.
bool feature_less(Term a, Term b);

}  // namespace ks

template <>
struct std::hash<ks::Term> {
  std::size_t operator()(ks::Term t) const noexcept {
    return std::hash<std::int64_t>{}(t.v * 16 + static_cast<int>(t.tag));
  }
};
