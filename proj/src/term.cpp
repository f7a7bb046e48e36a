#include "kernelspace/term.hpp"

#include <deque>
#include <mutex>
#include <unordered_map>

namespace ks {

namespace {

struct AtomTable {
  std::mutex mu;
  std::unordered_map<std::string, AtomId> ids;
  std::deque<std::string> names;
};

AtomTable& table() {
  static AtomTable t;
  return t;
}

}  // namespace

AtomId intern(std::string_view s) {
  auto& t = table();
  std::lock_guard lock(t.mu);
  auto it = t.ids.find(std::string(s));
  if (it != t.ids.end()) return it->second;
  AtomId id = static_cast<AtomId>(t.names.size());
  t.names.emplace_back(s);
  t.ids.emplace(std::string(s), id);
  return id;
}

std::string atom_name(AtomId a) {
  auto& t = table();
  std::lock_guard lock(t.mu);
  return t.names.at(static_cast<std::size_t>(a));
}

namespace atoms {
AtomId nil() { static const AtomId a = intern("nil"); return a; }
AtomId cons() { static const AtomId a = intern("|"); return a; }
AtomId pair() { static const AtomId a = intern("#"); return a; }
AtomId true_() { static const AtomId a = intern("true"); return a; }
AtomId false_() { static const AtomId a = intern("false"); return a; }
AtomId unit() { static const AtomId a = intern("unit"); return a; }
AtomId failure() { static const AtomId a = intern("failure"); return a; }
AtomId error() { static const AtomId a = intern("error"); return a; }
}  // namespace atoms

bool feature_less(Term a, Term b) {
  if (a.is_int() && b.is_int()) return a.v < b.v;
  if (a.is_int()) return true;
  if (b.is_int()) return false;
  if (a.v == b.v) return false;
  return atom_name(a.v) < atom_name(b.v);
}

}  // namespace ks
