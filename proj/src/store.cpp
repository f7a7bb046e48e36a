#include "kernelspace/store.hpp"

#include <algorithm>
#include <deque>
#include <mutex>
#include <set>
#include <string>
#include <unordered_map>

namespace ks {

namespace {

struct ArityTable {
  std::mutex mu;
  std::unordered_map<std::string, ArityId> ids;
  std::deque<Arity> infos;
  std::vector<ArityId> tuples;
};

ArityTable& arities() {
  static ArityTable t;
  return t;
}

std::string arity_key(const std::vector<Term>& fs) {
  std::string k;
  for (auto f : fs) {
    k += f.is_int() ? 'i' : 'a';
    k += std::to_string(f.v);
    k += ',';
  }
  return k;
}

}  // namespace

void sort_features(std::vector<Term>& features) {
  std::sort(features.begin(), features.end(), feature_less);
}

ArityId intern_arity(std::vector<Term> features) {
  sort_features(features);
  auto key = arity_key(features);
  auto& t = arities();
  std::lock_guard lock(t.mu);
  auto it = t.ids.find(key);
  if (it != t.ids.end()) return it->second;
  Arity a;
  a.tuple = true;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (!(features[i].is_int() && features[i].v == static_cast<std::int64_t>(i + 1))) a.tuple = false;
  }
  a.features = std::move(features);
  auto id = static_cast<ArityId>(t.infos.size());
  t.infos.push_back(std::move(a));
  t.ids.emplace(std::move(key), id);
  return id;
}

ArityId tuple_arity(std::size_t width) {
  {
    auto& t = arities();
    std::lock_guard lock(t.mu);
    if (width < t.tuples.size() && t.tuples[width] >= 0) return t.tuples[width];
  }
  std::vector<Term> fs;
  for (std::size_t i = 1; i <= width; ++i) fs.push_back(Term::integer(static_cast<std::int64_t>(i)));
  auto id = intern_arity(std::move(fs));
  auto& t = arities();
  std::lock_guard lock(t.mu);
  if (t.tuples.size() <= width) t.tuples.resize(width + 1, -1);
  t.tuples[width] = id;
  return id;
}

const Arity& arity_info(ArityId a) {
  auto& t = arities();
  std::lock_guard lock(t.mu);
  return t.infos.at(static_cast<std::size_t>(a));
}

int feature_index(ArityId a, Term feature) {
  const auto& info = arity_info(a);
  if (info.tuple) {
    if (feature.is_int() && feature.v >= 1 && feature.v <= static_cast<std::int64_t>(info.features.size()))
      return static_cast<int>(feature.v - 1);
    return -1;
  }
  for (std::size_t i = 0; i < info.features.size(); ++i)
    if (info.features[i] == feature) return static_cast<int>(i);
  return -1;
}

Store::Store() {
  spaces_.emplace_back();
}

SpaceId Store::new_space(SpaceId parent) {
  if (!live(parent)) throw UsageError("space is not live");
  auto id = static_cast<SpaceId>(spaces_.size());
  Space sp;
  sp.parent = parent;
  sp.depth = spaces_[parent].depth + 1;
  spaces_.push_back(std::move(sp));
  spaces_[parent].children.push_back(id);
  return id;
}

SpaceId Store::resolve(SpaceId s) const {
  while (spaces_[s].state == SpaceState::Merged) s = spaces_[s].merged_into;
  return s;
}

bool Store::descends(SpaceId s, SpaceId ancestor) const {
  s = resolve(s);
  ancestor = resolve(ancestor);
  while (spaces_[s].depth > spaces_[ancestor].depth) s = spaces_[s].parent;
  return s == ancestor;
}

void Store::mark_failed(SpaceId s) {
  std::vector<SpaceId> work{s};
  while (!work.empty()) {
    auto x = work.back();
    work.pop_back();
    auto& sp = spaces_[x];
    if (sp.state != SpaceState::Live) continue;
    sp.state = SpaceState::Failed;
    sp.bindings.clear();
    sp.domains.clear();
    for (auto c : sp.children) work.push_back(c);
  }
}

void Store::mark_merged(SpaceId s, SpaceId into) {
  auto& sp = spaces_[s];
  sp.state = SpaceState::Merged;
  sp.merged_into = into;
  sp.bindings.clear();
  sp.domains.clear();
  sp.locals.clear();
  sp.children.clear();
  auto& siblings = spaces_[sp.parent].children;
  siblings.erase(std::remove(siblings.begin(), siblings.end(), s), siblings.end());
}

void Store::reparent(SpaceId child, SpaceId new_parent) {
  auto& old = spaces_[spaces_[child].parent].children;
  old.erase(std::remove(old.begin(), old.end(), child), old.end());
  spaces_[child].parent = new_parent;
  spaces_[new_parent].children.push_back(child);
  std::vector<SpaceId> work{child};
  while (!work.empty()) {
    auto x = work.back();
    work.pop_back();
    spaces_[x].depth = spaces_[spaces_[x].parent].depth + 1;
    for (auto c : spaces_[x].children) work.push_back(c);
  }
}

VarId Store::new_var(SpaceId home) {
  if (!live(home)) throw UsageError("variable home space is not live");
  auto id = static_cast<VarId>(vars_.size());
  vars_.push_back(Var{Term::var(id), home, 0, {}});
  if (home != kTopSpace) spaces_[home].locals.push_back(id);
  return id;
}

void Store::set_trigger(VarId v, bool on) {
  if (on) vars_[v].flags |= kTrigger;
  else vars_[v].flags &= static_cast<std::uint8_t>(~kTrigger);
}

Term Store::deref(Term t, SpaceId s) const {
  while (t.is_var()) {
    const Var& x = vars_[t.v];
    if (x.ref != t) {
      t = x.ref;
      continue;
    }
    if (!(x.flags & kShadowed)) return t;
    bool found = false;
    for (SpaceId sp = resolve(s); sp != x.home && sp != kNoSpace; sp = spaces_[sp].parent) {
      auto it = spaces_[sp].bindings.find(t.v);
      if (it != spaces_[sp].bindings.end()) {
        t = it->second;
        found = true;
        break;
      }
    }
    if (!found) return t;
  }
  return t;
}

Term Store::make_record(Term label, ArityId arity, std::span<const Term> args, SpaceId owner) {
  if (args.empty()) return label;
  auto id = static_cast<std::int64_t>(records_.size());
  records_.push_back(Record{label, arity, owner, std::vector<Term>(args.begin(), args.end())});
  return Term::record(id);
}

Term Store::make_tuple(Term label, std::span<const Term> args, SpaceId owner) {
  return make_record(label, tuple_arity(args.size()), args, owner);
}

Term Store::make_cons(Term head, Term tail, SpaceId owner) {
  Term args[2] = {head, tail};
  return make_tuple(Term::atom(atoms::cons()), args, owner);
}

Term Store::make_list(std::span<const Term> items, SpaceId owner) {
  Term out = Term::atom(atoms::nil());
  for (auto it = items.rbegin(); it != items.rend(); ++it) out = make_cons(*it, out, owner);
  return out;
}

RecordView Store::record(Term r) const {
  const auto& rec = records_[r.v];
  return {rec.label, rec.arity, std::span<const Term>(rec.args)};
}

void Store::shadow(VarId v, SpaceId s) {
  vars_[v].flags |= kShadowed;
  auto& list = shadows_[v];
  if (std::find(list.begin(), list.end(), s) == list.end()) list.push_back(s);
}

void Store::bind(VarId v, Term t, SpaceId s) {
  s = resolve(s);
  if (s == vars_[v].home) {
    vars_[v].ref = t;
  } else {
    spaces_[s].bindings[v] = t;
    shadow(v, s);
  }
  notify(v, s, false);
  if (vars_[v].flags & kShadowed) reconcile(v, s);
}

void Store::set_binding(VarId v, Term t, SpaceId s) {
  s = resolve(s);
  if (s == vars_[v].home) {
    vars_[v].ref = t;
  } else {
    spaces_[s].bindings[v] = t;
    shadow(v, s);
  }
}

void Store::rehome(VarId v, SpaceId s) {
  vars_[v].home = s;
  if (s != kTopSpace) spaces_[s].locals.push_back(v);
}

VarId Store::copy_var(VarId from, SpaceId home) {
  auto id = new_var(home);
  vars_[id].flags = vars_[from].flags & static_cast<std::uint8_t>(~kShadowed);
  return id;
}

void Store::set_domain(VarId v, SpaceId s, fd::Domain d) {
  s = resolve(s);
  vars_[v].flags |= kDomain;
  spaces_[s].domains[v] = std::move(d);
  if (s != vars_[v].home) shadow(v, s);
}

void Store::notify(VarId v, SpaceId s, bool props_only) {
  auto& ws = vars_[v].waiters;
  if (ws.empty()) return;
  std::vector<Waiter> woken;
  std::size_t keep = 0;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    Waiter w = ws[i];
    if (listener_ && listener_->stale(w)) continue;
    bool under = descends(w.space, s);
    if (w.kind == Waiter::Thread) {
      if (!props_only && under) {
        woken.push_back(w);
        continue;
      }
    } else if (under) {
      woken.push_back(w);
    }
    ws[keep++] = w;
  }
  ws.resize(keep);
  if (listener_)
    for (const auto& w : woken) listener_->wake(w);
}

void Store::copy_props(VarId from, VarId to) {
  std::vector<Waiter> props;
  for (const auto& w : vars_[from].waiters)
    if (w.kind == Waiter::Prop) props.push_back(w);
  auto& dst = vars_[to].waiters;
  dst.insert(dst.end(), props.begin(), props.end());
}

void Store::reconcile(VarId v, SpaceId s) {
  auto it = shadows_.find(v);
  if (it == shadows_.end()) return;
  auto list = it->second;
  for (auto d : list) {
    if (d == s || !live(d) || !descends(d, s)) continue;
    auto p = spaces_[d].parent;
    Term pv = deref(Term::var(v), p);
    auto& sp = spaces_[d];
    auto bit = sp.bindings.find(v);
    bool bad = false;
    if (bit != sp.bindings.end()) {
      Term b = bit->second;
      if (!(pv.is_var() && pv.v == v)) {
        bad = unify(b, pv, d).status == Outcome::Fail;
      } else if (const auto* pd = domain(v, p)) {
        bad = narrow(b, *pd, d) == Narrow::Fail;
      }
    } else {
      auto dit = sp.domains.find(v);
      if (dit == sp.domains.end()) continue;
      fd::Domain mine = dit->second;
      if (!pv.is_var()) {
        bad = !(pv.is_int() && mine.contains(pv.v));
      } else if (pv.v != v) {
        bad = narrow(pv, mine, d) == Narrow::Fail;
      } else if (const auto* pd = domain(v, p)) {
        auto nd = mine.intersect(*pd);
        if (nd.empty()) {
          bad = true;
        } else if (!(nd == mine)) {
          sp.domains.erase(v);
          bad = narrow(pv, nd, d) == Narrow::Fail;
        }
      }
    }
    if (bad && listener_) listener_->space_inconsistent(d);
  }
  auto& live_list = shadows_[v];
  live_list.erase(std::remove_if(live_list.begin(), live_list.end(),
                                 [this](SpaceId x) { return !live(x); }),
                  live_list.end());
}

const fd::Domain* Store::domain(VarId v, SpaceId s) const {
  const auto& x = vars_[v];
  if (!(x.flags & kDomain)) return nullptr;
  for (SpaceId sp = resolve(s); sp != kNoSpace; sp = spaces_[sp].parent) {
    auto it = spaces_[sp].domains.find(v);
    if (it != spaces_[sp].domains.end()) return &it->second;
    if (sp == x.home) break;
  }
  return nullptr;
}

Narrow Store::narrow(Term x, const fd::Domain& d, SpaceId s) {
  Term t = deref(x, s);
  if (t.is_int()) return d.contains(t.v) ? Narrow::NoChange : Narrow::Fail;
  if (!t.is_var()) return Narrow::Fail;
  VarId v = t.v;
  const auto* cur = domain(v, s);
  fd::Domain nd = cur ? cur->intersect(d) : d.intersect(0, fd::kSup);
  if (nd.empty()) return Narrow::Fail;
  if (cur && nd == *cur) return Narrow::NoChange;
  if (nd.is_singleton()) {
    bind(v, Term::integer(nd.min()), s);
    return Narrow::Changed;
  }
  set_domain(v, s, std::move(nd));
  notify(v, resolve(s), true);
  if (vars_[v].flags & kShadowed) reconcile(v, resolve(s));
  return Narrow::Changed;
}

TellResult Store::bind_value(VarId v, Term t, SpaceId s) {
  if (has_trigger(v)) {
    if (listener_) listener_->need(v, s);
    return {Outcome::Suspend, v};
  }
  if (vars_[v].flags & kDomain) {
    if (const auto* d = domain(v, s)) {
      if (!t.is_int() || !d->contains(t.v)) return {Outcome::Fail, -1};
    }
  }
  bind(v, t, s);
  return {};
}

TellResult Store::bind_vars(VarId x, VarId y, SpaceId s) {
  bool tx = has_trigger(x), ty = has_trigger(y);
  if (tx && ty) {
    if (listener_) listener_->need(y, s);
    return {Outcome::Suspend, y};
  }
  const auto* dx = domain(x, s);
  const auto* dy = domain(y, s);
  VarId target;
  if (tx) target = x;
  else if (ty) target = y;
  else if (dx && !dy) target = x;
  else if (dy && !dx) target = y;
  else {
    int hx = spaces_[vars_[x].home].depth, hy = spaces_[vars_[y].home].depth;
    if (hx != hy) target = hx < hy ? x : y;
    else target = std::min(x, y);
  }
  VarId other = target == x ? y : x;
  const auto* dt = target == x ? dx : dy;
  const auto* dother = target == x ? dy : dx;
  fd::Domain nd;
  bool narrow_target = false;
  if (dother) {
    nd = dt ? dt->intersect(*dother) : *dother;
    if (nd.empty()) return {Outcome::Fail, -1};
    narrow_target = !dt || !(nd == *dt);
  }
  copy_props(other, target);
  bind(other, Term::var(target), s);
  if (narrow_target && narrow(Term::var(target), nd, s) == Narrow::Fail) return {Outcome::Fail, -1};
  return {};
}

TellResult Store::unify(Term a, Term b, SpaceId s) {
  s = resolve(s);
  std::vector<std::pair<Term, Term>> stack;
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  stack.emplace_back(a, b);
  while (!stack.empty()) {
    auto [x0, y0] = stack.back();
    stack.pop_back();
    Term x = deref(x0, s), y = deref(y0, s);
    if (x == y) continue;
    TellResult r;
    if (x.is_var() && y.is_var()) {
      r = bind_vars(x.v, y.v, s);
    } else if (x.is_var()) {
      r = bind_value(x.v, y, s);
    } else if (y.is_var()) {
      r = bind_value(y.v, x, s);
    } else if (x.is_record() && y.is_record()) {
      const auto& rx = records_[x.v];
      const auto& ry = records_[y.v];
      if (rx.label != ry.label || rx.arity != ry.arity) return {Outcome::Fail, -1};
      if (!seen.insert({std::min(x.v, y.v), std::max(x.v, y.v)}).second) continue;
      for (std::size_t i = rx.args.size(); i-- > 0;) stack.emplace_back(rx.args[i], ry.args[i]);
      continue;
    } else {
      return {Outcome::Fail, -1};
    }
    if (r.status != Outcome::Ok) return r;
  }
  return {};
}

Entail Store::entails(Term x, Term label, ArityId arity, SpaceId s, VarId* wait) const {
  Term t = deref(x, s);
  if (t.is_var()) {
    if (wait) *wait = t.v;
    return Entail::Unknown;
  }
  if (t.is_record()) {
    const auto& r = records_[t.v];
    return r.label == label && r.arity == arity ? Entail::Yes : Entail::No;
  }
  return arity_info(arity).features.empty() && t == label ? Entail::Yes : Entail::No;
}

Entail Store::equal(Term a, Term b, SpaceId s, VarId* wait) const {
  std::vector<std::pair<Term, Term>> stack;
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  stack.emplace_back(a, b);
  bool unknown = false;
  while (!stack.empty()) {
    auto [x0, y0] = stack.back();
    stack.pop_back();
    Term x = deref(x0, s), y = deref(y0, s);
    if (x == y) continue;
    if (x.is_var() || y.is_var()) {
      Term v = x.is_var() ? x : y;
      Term o = x.is_var() ? y : x;
      if (o.is_int()) {
        if (const auto* d = domain(v.v, s); d && !d->contains(o.v)) return Entail::No;
      } else if (!o.is_var() && (vars_[v.v].flags & kDomain) && domain(v.v, s)) {
        return Entail::No;
      }
      if (!unknown && wait) *wait = v.v;
      unknown = true;
      continue;
    }
    if (x.is_record() && y.is_record()) {
      const auto& rx = records_[x.v];
      const auto& ry = records_[y.v];
      if (rx.label != ry.label || rx.arity != ry.arity) return Entail::No;
      if (!seen.insert({std::min(x.v, y.v), std::max(x.v, y.v)}).second) continue;
      for (std::size_t i = rx.args.size(); i-- > 0;) stack.emplace_back(rx.args[i], ry.args[i]);
      continue;
    }
    return Entail::No;
  }
  return unknown ? Entail::Unknown : Entail::Yes;
}

}  // namespace ks
