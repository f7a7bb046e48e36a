#include <algorithm>

#include "kernelspace/vm.hpp"

namespace ks {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

struct Bounds {
  std::int64_t lo, hi;
};

}  // namespace

bool VM::ensure_domain(Term x, SpaceId s) {
  Term t = store_.deref(x, s);
  if (t.is_int()) return t.v >= 0 && t.v <= fd::kSup;
  if (!t.is_var()) return false;
  if (store_.domain(t.v, s)) return true;
  return store_.narrow(t, fd::Domain::full(), s) != Narrow::Fail;
}

PropId VM::add_prop(Propagator p) {
  auto id = static_cast<PropId>(props_.size());
  SpaceId s = store_.resolve(p.space);
  p.space = s;
  props_.push_back(std::move(p));
  for (auto v : props_.back().vars) {
    Term d = store_.deref(v, s);
    if (d.is_var()) store_.add_waiter(d.v, Waiter{Waiter::Prop, s, id, 0});
  }
  info(s).props.push_back(id);
  return id;
}

PropResult VM::run_prop(Propagator& p) {
  switch (p.kind) {
    case Propagator::Linear:
      return run_linear(p);
    case Propagator::Mult:
      return run_mult(p);
    case Propagator::Distinct:
      return run_distinct(p);
  }
  return PropResult::Active;
}

PropResult VM::run_linear(Propagator& p) {
  ++stats_.propagator_runs;
  SpaceId s = store_.resolve(p.space);
  std::size_t n = p.vars.size();
  auto bounds = [&](std::size_t i) -> Bounds {
    Term t = store_.deref(p.vars[i], s);
    if (t.is_int()) return {t.v, t.v};
    const auto* d = store_.domain(t.v, s);
    if (!d) return {0, fd::kSup};
    return {d->min(), d->max()};
  };
  // contribution bounds of term i
  auto term = [&](std::size_t i) -> Bounds {
    auto b = bounds(i);
    std::int64_t a = p.coefs[i];
    return a >= 0 ? Bounds{a * b.lo, a * b.hi} : Bounds{a * b.hi, a * b.lo};
  };

  if (p.rel == Propagator::Ne) {
    std::int64_t sum = 0;
    std::size_t open = n;
    for (std::size_t i = 0; i < n; ++i) {
      Term t = store_.deref(p.vars[i], s);
      if (t.is_int()) sum += p.coefs[i] * t.v;
      else if (open == n) open = i;
      else return PropResult::Active;
    }
    if (open == n) return sum != p.c ? PropResult::Entailed : PropResult::Fail;
    std::int64_t a = p.coefs[open], rest = p.c - sum;
    if (a == 0) return rest != 0 ? PropResult::Entailed : PropResult::Fail;
    if (rest % a != 0) return PropResult::Entailed;
    std::int64_t v = rest / a;
    Term x = store_.deref(p.vars[open], s);
    const auto* d = store_.domain(x.v, s);
    fd::Domain nd = (d ? *d : fd::Domain::full()).remove(v);
    if (store_.narrow(x, nd, s) == Narrow::Fail) return PropResult::Fail;
    return PropResult::Entailed;
  }

  for (bool changed = true; changed;) {
    changed = false;
    std::int64_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto b = term(i);
      lo += b.lo;
      hi += b.hi;
    }
    if (lo > p.c) return PropResult::Fail;
    if (p.rel == Propagator::Eq && hi < p.c) return PropResult::Fail;
    if (p.rel == Propagator::Le && hi <= p.c) return PropResult::Entailed;
    for (std::size_t i = 0; i < n; ++i) {
      std::int64_t a = p.coefs[i];
      if (a == 0) continue;
      Term x = store_.deref(p.vars[i], s);
      if (!x.is_var()) continue;
      auto b = term(i);
      // a*x <= c - (lo - b.lo), and for Eq also a*x >= c - (hi - b.hi)
      std::int64_t up = p.c - (lo - b.lo);
      std::int64_t xlo = 0, xhi = fd::kSup;
      if (a > 0) xhi = floor_div(up, a);
      else xlo = ceil_div(up, a);
      if (p.rel == Propagator::Eq) {
        std::int64_t down = p.c - (hi - b.hi);
        if (a > 0) xlo = std::max(xlo, ceil_div(down, a));
        else xhi = std::min(xhi, floor_div(down, a));
      }
      xlo = std::max<std::int64_t>(xlo, 0);
      xhi = std::min(xhi, fd::kSup);
      if (xlo > xhi) return PropResult::Fail;
      auto r = store_.narrow(x, fd::Domain::range(xlo, xhi), s);
      if (r == Narrow::Fail) return PropResult::Fail;
      if (r == Narrow::Changed) {
        changed = true;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!store_.is_det(p.vars[i], s)) return PropResult::Active;
  return PropResult::Entailed;
}

PropResult VM::run_mult(Propagator& p) {
  ++stats_.propagator_runs;
  SpaceId s = store_.resolve(p.space);
  auto bounds = [&](std::size_t i) -> Bounds {
    Term t = store_.deref(p.vars[i], s);
    if (t.is_int()) return {t.v, t.v};
    const auto* d = store_.domain(t.v, s);
    if (!d) return {0, fd::kSup};
    return {d->min(), d->max()};
  };
  auto narrow = [&](std::size_t i, std::int64_t lo, std::int64_t hi, bool& changed) {
    lo = std::max<std::int64_t>(lo, 0);
    hi = std::min(hi, fd::kSup);
    if (lo > hi) return false;
    auto r = store_.narrow(p.vars[i], fd::Domain::range(lo, hi), s);
    if (r == Narrow::Changed) changed = true;
    return r != Narrow::Fail;
  };
  for (bool changed = true; changed;) {
    changed = false;
    auto x = bounds(0), y = bounds(1), z = bounds(2);
    if (!narrow(2, x.lo * y.lo, x.hi * y.hi, changed)) return PropResult::Fail;
    z = bounds(2);
    // x from z / y, and symmetrically
    for (int k = 0; k < 2; ++k) {
      std::size_t i = k == 0 ? 0 : 1;
      auto other = k == 0 ? bounds(1) : bounds(0);
      std::int64_t lo = 0, hi = fd::kSup;
      if (other.hi > 0) lo = ceil_div(z.lo, other.hi);
      if (other.lo > 0) hi = floor_div(z.hi, other.lo);
      if (!narrow(i, lo, hi, changed)) return PropResult::Fail;
    }
  }
  for (std::size_t i = 0; i < 3; ++i)
    if (!store_.is_det(p.vars[i], s)) return PropResult::Active;
  auto x = bounds(0), y = bounds(1), z = bounds(2);
  return x.lo * y.lo == z.lo ? PropResult::Entailed : PropResult::Fail;
}

PropResult VM::run_distinct(Propagator& p) {
  ++stats_.propagator_runs;
  SpaceId s = store_.resolve(p.space);
  std::size_t n = p.vars.size();
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<std::int64_t> fixed;
    for (std::size_t i = 0; i < n; ++i) {
      Term t = store_.deref(p.vars[i], s);
      if (t.is_int()) fixed.push_back(t.v);
    }
    std::sort(fixed.begin(), fixed.end());
    if (std::adjacent_find(fixed.begin(), fixed.end()) != fixed.end()) return PropResult::Fail;
    for (std::size_t i = 0; i < n && !changed; ++i) {
      Term t = store_.deref(p.vars[i], s);
      if (!t.is_var()) continue;
      const auto* d = store_.domain(t.v, s);
      fd::Domain nd = d ? *d : fd::Domain::full();
      for (auto v : fixed) nd = nd.remove(v);
      auto r = store_.narrow(t, nd, s);
      if (r == Narrow::Fail) return PropResult::Fail;
      if (r == Narrow::Changed) changed = true;
    }
  }
  std::vector<std::pair<std::int64_t, std::int64_t>> ivs;
  std::int64_t open = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Term t = store_.deref(p.vars[i], s);
    if (t.is_int()) {
      ivs.emplace_back(t.v, t.v);
      continue;
    }
    ++open;
    const auto* d = store_.domain(t.v, s);
    if (!d) ivs.emplace_back(0, fd::kSup);
    else ivs.insert(ivs.end(), d->intervals().begin(), d->intervals().end());
  }
  if (open == 0) return PropResult::Entailed;
  std::sort(ivs.begin(), ivs.end());
  std::int64_t total = 0, cur_lo = ivs[0].first, cur_hi = ivs[0].second;
  for (std::size_t i = 1; i < ivs.size(); ++i) {
    if (ivs[i].first <= cur_hi + 1) {
      cur_hi = std::max(cur_hi, ivs[i].second);
    } else {
      total += cur_hi - cur_lo + 1;
      cur_lo = ivs[i].first;
      cur_hi = ivs[i].second;
    }
  }
  total += cur_hi - cur_lo + 1;
  if (total < static_cast<std::int64_t>(n)) return PropResult::Fail;
  return PropResult::Active;
}

// Hook-posted propagators wait on the agenda for propagate().
PropId VM::schedule(PropId id) {
  wake(Waiter{Waiter::Prop, props_[static_cast<std::size_t>(id)].space, id, 0});
  return id;
}

PropId VM::post_linear(std::vector<std::int64_t> coefs, std::vector<Term> vars, Propagator::Rel rel,
                       std::int64_t c, SpaceId s) {
  Propagator p;
  p.kind = Propagator::Linear;
  p.rel = rel;
  p.space = s;
  p.vars = std::move(vars);
  p.coefs = std::move(coefs);
  p.c = c;
  for (auto v : p.vars) ensure_domain(v, s);
  return schedule(add_prop(std::move(p)));
}

PropId VM::post_mult(Term x, Term y, Term z, SpaceId s) {
  Propagator p;
  p.kind = Propagator::Mult;
  p.space = s;
  p.vars = {x, y, z};
  for (auto v : p.vars) ensure_domain(v, s);
  return schedule(add_prop(std::move(p)));
}

PropId VM::post_distinct(std::vector<Term> vars, SpaceId s) {
  Propagator p;
  p.kind = Propagator::Distinct;
  p.space = s;
  p.vars = std::move(vars);
  for (auto v : p.vars) ensure_domain(v, s);
  return schedule(add_prop(std::move(p)));
}

PropResult VM::run_propagator(PropId id) {
  auto& p = props_.at(static_cast<std::size_t>(id));
  if (p.dead) return PropResult::Entailed;
  p.queued = true;
  auto r = run_prop(props_[static_cast<std::size_t>(id)]);
  props_[static_cast<std::size_t>(id)].queued = false;
  if (r != PropResult::Active) props_[static_cast<std::size_t>(id)].dead = true;
  return r;
}

bool VM::propagate(SpaceId s) {
  auto before = uncaught_.size();
  settle();
  SpaceId r = store_.resolve(s);
  return store_.live(r) && uncaught_.size() == before;
}

namespace {

Propagator::Rel rel_of(Term t) {
  std::string name = atom_name(t.v);
  if (name == "=") return Propagator::Eq;
  if (name == "\\=") return Propagator::Ne;
  return Propagator::Le;
}

}  // namespace

VM::BResult VM::b_fd_decl(Thread& t, std::span<const Term> a) {
  Term x = store_.deref(a[0], t.space);
  if (x.is_int()) return x.v >= 0 && x.v <= fd::kSup ? BResult::done() : BResult::fail();
  if (!x.is_var()) return type_error("fd variable", x);
  if (store_.domain(x.v, t.space)) return BResult::raise(make_error("fd", atom_term("variable already has a domain")));
  if (store_.narrow(x, fd::Domain::full(), t.space) == Narrow::Fail) return BResult::fail();
  return BResult::done();
}

VM::BResult VM::b_fd_tell_dom(Thread& t, std::span<const Term> a) {
  BResult r;
  std::int64_t lo, hi;
  if (!int_arg(a[1], t.space, lo, r) || !int_arg(a[2], t.space, hi, r)) return r;
  Term x = store_.deref(a[0], t.space);
  std::vector<Term> targets;
  if (x.is_record()) {
    if (!items_arg(x, t.space, targets, r)) return r;
  } else {
    targets.push_back(x);
  }
  lo = std::max<std::int64_t>(lo, 0);
  hi = std::min(hi, fd::kSup);
  if (lo > hi) return BResult::fail();
  auto d = fd::Domain::range(lo, hi);
  for (auto v : targets) {
    Term y = store_.deref(v, t.space);
    if (!y.is_var() && !y.is_int()) return type_error("fd variable", y);
    if (store_.narrow(y, d, t.space) == Narrow::Fail) return BResult::fail();
  }
  return r;
}

VM::BResult VM::b_fd_linear(Thread& t, std::span<const Term> a) {
  BResult r;
  std::vector<Term> cs, vs;
  if (!list_arg(a[0], t.space, cs, r) || !list_arg(a[1], t.space, vs, r)) return r;
  Term rel = store_.deref(a[2], t.space);
  if (rel.is_var()) return BResult::suspend(rel.v);
  std::int64_t c;
  if (!int_arg(a[3], t.space, c, r)) return r;
  std::vector<std::int64_t> coefs;
  for (auto x : cs) {
    std::int64_t k;
    if (!int_arg(x, t.space, k, r)) return r;
    coefs.push_back(k);
  }
  for (auto v : vs)
    if (!ensure_domain(v, t.space)) return BResult::fail();
  PropId id = post_linear(std::move(coefs), std::move(vs), rel_of(rel), c, t.space);
  if (run_propagator(id) == PropResult::Fail) return BResult::fail();
  return r;
}

VM::BResult VM::b_fd_mult(Thread& t, std::span<const Term> a) {
  for (int i = 0; i < 3; ++i)
    if (!ensure_domain(a[i], t.space)) return BResult::fail();
  PropId id = post_mult(a[0], a[1], a[2], t.space);
  if (run_propagator(id) == PropResult::Fail) return BResult::fail();
  return BResult::done();
}

VM::BResult VM::b_fd_distinct(Thread& t, std::span<const Term> a) {
  BResult r;
  std::vector<Term> vs;
  if (!items_arg(a[0], t.space, vs, r)) return r;
  for (auto v : vs)
    if (!ensure_domain(v, t.space)) return BResult::fail();
  PropId id = post_distinct(std::move(vs), t.space);
  if (run_propagator(id) == PropResult::Fail) return BResult::fail();
  return r;
}

VM::BResult VM::b_fd_neq(Thread& t, std::span<const Term> a) {
  BResult r;
  std::int64_t m;
  if (!int_arg(a[1], t.space, m, r)) return r;
  Term x = store_.deref(a[0], t.space);
  if (x.is_int()) return x.v != m ? BResult::done() : BResult::fail();
  if (!x.is_var()) return type_error("fd variable", x);
  const auto* d = store_.domain(x.v, t.space);
  fd::Domain nd = (d ? *d : fd::Domain::full()).remove(m);
  if (store_.narrow(x, nd, t.space) == Narrow::Fail) return BResult::fail();
  return r;
}

VM::BResult VM::b_fd_select_ff(Thread& t, std::span<const Term> a) {
  BResult r;
  std::vector<Term> vs;
  if (!items_arg(a[0], t.space, vs, r)) return r;
  Term best;
  std::int64_t best_size = 0, best_min = 0;
  bool found = false;
  for (auto v : vs) {
    Term x = store_.deref(v, t.space);
    if (!x.is_var()) continue;
    const auto* d = store_.domain(x.v, t.space);
    fd::Domain dom = d ? *d : fd::Domain::full();
    if (!found || dom.size() < best_size) {
      found = true;
      best = x;
      best_size = dom.size();
      best_min = dom.min();
    }
  }
  if (!found) {
    push_tell(t, a[1], Term::atom(atoms::unit()));
    return r;
  }
  Term pair[2] = {best, Term::integer(best_min)};
  push_tell(t, a[1], store_.make_tuple(Term::atom(atoms::pair()), pair, store_.resolve(t.space)));
  return r;
}

}  // namespace ks
