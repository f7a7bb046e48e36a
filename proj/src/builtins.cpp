#include "kernelspace/vm.hpp"

namespace ks {

const std::vector<VM::BuiltinDef>& VM::builtins() {
  static const std::vector<BuiltinDef> table = {
      {"Browse", 1, &VM::b_browse},
      {"IntPlus", 3, &VM::b_plus},
      {"IntMinus", 3, &VM::b_minus},
      {"IntTimes", 3, &VM::b_times},
      {"Less", 3, &VM::b_less},
      {"Leq", 3, &VM::b_leq},
      {"Equal", 3, &VM::b_equal},
      {"NotEqual", 3, &VM::b_not_equal},
      {"IsDet", 2, &VM::b_is_det},
      {"Wait", 1, &VM::b_wait},
      {"NewName", 1, &VM::b_new_name},
      {"ByNeed", 2, &VM::b_by_need},
      {"NewCell", 2, &VM::b_new_cell},
      {"Exchange", 3, &VM::b_exchange},
      {"NewPort", 2, &VM::b_new_port},
      {"Send", 2, &VM::b_send},
      {"Dot", 3, &VM::b_dot},
      {"NewSpace", 2, &VM::b_new_space},
      {"Choose", 2, &VM::b_choose},
      {"Ask", 2, &VM::b_ask},
      {"Commit", 2, &VM::b_commit},
      {"Clone", 2, &VM::b_clone},
      {"Inject", 2, &VM::b_inject},
      {"Merge", 2, &VM::b_merge},
      {"FDDecl", 1, &VM::b_fd_decl},
      {"FDTellDom", 3, &VM::b_fd_tell_dom},
      {"FDLinear", 4, &VM::b_fd_linear},
      {"FDMult", 3, &VM::b_fd_mult},
      {"FDDistinct", 1, &VM::b_fd_distinct},
      {"FDNeq", 2, &VM::b_fd_neq},
      {"FDSelectFF", 2, &VM::b_fd_select_ff},
  };
  return table;
}

VM::BResult VM::type_error(const char* what, Term) { return BResult::raise(make_error("type", atom_term(what))); }

bool VM::int_arg(Term t, SpaceId s, std::int64_t& out, BResult& r) {
  Term v = store_.deref(t, s);
  if (v.is_var()) {
    r = BResult::suspend(v.v);
    return false;
  }
  if (!v.is_int()) {
    r = type_error("int", v);
    return false;
  }
  out = v.v;
  return true;
}

bool VM::list_arg(Term t, SpaceId s, std::vector<Term>& out, BResult& r) {
  out.clear();
  Term cur = store_.deref(t, s);
  for (;;) {
    if (cur.is_var()) {
      r = BResult::suspend(cur.v);
      return false;
    }
    if (cur == Term::atom(atoms::nil())) return true;
    if (cur.is_record()) {
      const auto& rec = store_.record_header(cur);
      if (rec.label == Term::atom(atoms::cons()) && rec.args.size() == 2) {
        out.push_back(rec.args[0]);
        cur = store_.deref(rec.args[1], s);
        continue;
      }
    }
    r = type_error("list", cur);
    return false;
  }
}

bool VM::items_arg(Term t, SpaceId s, std::vector<Term>& out, BResult& r) {
  Term v = store_.deref(t, s);
  if (v.is_var()) {
    r = BResult::suspend(v.v);
    return false;
  }
  if (v.is_record() && store_.record_header(v).label != Term::atom(atoms::cons())) {
    const auto& args = store_.record_header(v).args;
    out.assign(args.begin(), args.end());
    return true;
  }
  return list_arg(v, s, out, r);
}

bool VM::top_only(Thread& t, BResult& r, const char* what) {
  if (store_.resolve(t.space) == kTopSpace) return true;
  r = BResult::raise(make_error("state", atom_term(what)));
  return false;
}

VM::BResult VM::b_browse(Thread& t, std::span<const Term> a) {
  log_.push_back(BrowseEntry{a[0], store_.resolve(t.space)});
  return BResult::done();
}

VM::BResult VM::b_plus(Thread& t, std::span<const Term> a) {
  BResult r;
  std::int64_t x, y;
  if (!int_arg(a[0], t.space, x, r) || !int_arg(a[1], t.space, y, r)) return r;
  push_tell(t, a[2], Term::integer(x + y));
  return r;
}

VM::BResult VM::b_minus(Thread& t, std::span<const Term> a) {
  BResult r;
  std::int64_t x, y;
  if (!int_arg(a[0], t.space, x, r) || !int_arg(a[1], t.space, y, r)) return r;
  push_tell(t, a[2], Term::integer(x - y));
  return r;
}

VM::BResult VM::b_times(Thread& t, std::span<const Term> a) {
  BResult r;
  std::int64_t x, y;
  if (!int_arg(a[0], t.space, x, r) || !int_arg(a[1], t.space, y, r)) return r;
  push_tell(t, a[2], Term::integer(x * y));
  return r;
}

VM::BResult VM::b_less(Thread& t, std::span<const Term> a) {
  BResult r;
  std::int64_t x, y;
  if (!int_arg(a[0], t.space, x, r) || !int_arg(a[1], t.space, y, r)) return r;
  push_tell(t, a[2], bool_term(x < y));
  return r;
}

VM::BResult VM::b_leq(Thread& t, std::span<const Term> a) {
  BResult r;
  std::int64_t x, y;
  if (!int_arg(a[0], t.space, x, r) || !int_arg(a[1], t.space, y, r)) return r;
  push_tell(t, a[2], bool_term(x <= y));
  return r;
}

VM::BResult VM::b_equal(Thread& t, std::span<const Term> a) {
  VarId wait = -1;
  auto e = store_.equal(a[0], a[1], t.space, &wait);
  if (e == Entail::Unknown) return BResult::suspend(wait);
  push_tell(t, a[2], bool_term(e == Entail::Yes));
  return BResult::done();
}

VM::BResult VM::b_not_equal(Thread& t, std::span<const Term> a) {
  VarId wait = -1;
  auto e = store_.equal(a[0], a[1], t.space, &wait);
  if (e == Entail::Unknown) return BResult::suspend(wait);
  push_tell(t, a[2], bool_term(e == Entail::No));
  return BResult::done();
}

VM::BResult VM::b_is_det(Thread& t, std::span<const Term> a) {
  push_tell(t, a[1], bool_term(store_.is_det(a[0], t.space)));
  return BResult::done();
}

VM::BResult VM::b_wait(Thread& t, std::span<const Term> a) {
  Term v = store_.deref(a[0], t.space);
  if (v.is_var()) return BResult::suspend(v.v);
  return BResult::done();
}

VM::BResult VM::b_new_name(Thread& t, std::span<const Term> a) {
  push_tell(t, a[0], Term::name(names_++));
  return BResult::done();
}

VM::BResult VM::b_by_need(Thread& t, std::span<const Term> a) {
  Term p = store_.deref(a[0], t.space);
  if (p.is_var()) return BResult::suspend(p.v);
  if (p.tag != Tag::Proc && p.tag != Tag::Builtin) return type_error("procedure", p);
  Term x = store_.deref(a[1], t.space);
  if (!x.is_var()) return BResult::done();
  VarId v = x.v;
  if (store_.has_trigger(v)) return BResult::raise(make_error("byneed", atom_term("trigger already installed")));
  triggers_[v] = Trigger{p, store_.resolve(t.space)};
  store_.set_trigger(v, true);
  ++stats_.trigger_installs;
  bool needed = false;
  for (const auto& w : store_.var(v).waiters)
    if (w.kind == Waiter::Thread && !stale(w)) needed = true;
  if (needed) need(v, t.space);
  return BResult::done();
}

VM::BResult VM::b_new_cell(Thread& t, std::span<const Term> a) {
  BResult r;
  if (!top_only(t, r, "cells are only available in the top-level space")) return r;
  auto id = static_cast<std::int64_t>(cells_.size());
  cells_.push_back(Cell{a[0]});
  push_tell(t, a[1], Term::cell(id));
  return r;
}

VM::BResult VM::b_exchange(Thread& t, std::span<const Term> a) {
  BResult r;
  if (!top_only(t, r, "cells are only available in the top-level space")) return r;
  Term c = store_.deref(a[0], t.space);
  if (c.is_var()) return BResult::suspend(c.v);
  if (c.tag != Tag::Cell) return type_error("cell", c);
  Term old = cells_[static_cast<std::size_t>(c.v)].content;
  cells_[static_cast<std::size_t>(c.v)].content = a[2];
  push_tell(t, a[1], old);
  return r;
}

VM::BResult VM::b_new_port(Thread& t, std::span<const Term> a) {
  BResult r;
  if (!top_only(t, r, "ports are only available in the top-level space")) return r;
  auto id = static_cast<std::int64_t>(ports_.size());
  ports_.push_back(Port{a[0]});
  push_tell(t, a[1], Term::port(id));
  return r;
}

VM::BResult VM::b_send(Thread& t, std::span<const Term> a) {
  BResult r;
  if (!top_only(t, r, "ports are only available in the top-level space")) return r;
  Term p = store_.deref(a[0], t.space);
  if (p.is_var()) return BResult::suspend(p.v);
  if (p.tag != Tag::Port) return type_error("port", p);
  Term fresh = store_.fresh(kTopSpace);
  Term old = ports_[static_cast<std::size_t>(p.v)].tail;
  ports_[static_cast<std::size_t>(p.v)].tail = fresh;
  push_tell(t, old, store_.make_cons(a[1], fresh, kTopSpace));
  return r;
}

VM::BResult VM::b_dot(Thread& t, std::span<const Term> a) {
  Term rec = store_.deref(a[0], t.space);
  if (rec.is_var()) return BResult::suspend(rec.v);
  Term f = store_.deref(a[1], t.space);
  if (f.is_var()) return BResult::suspend(f.v);
  if (rec.is_record()) {
    const auto& h = store_.record_header(rec);
    int i = feature_index(h.arity, f);
    if (i >= 0) {
      push_tell(t, a[2], h.args[static_cast<std::size_t>(i)]);
      return BResult::done();
    }
  } else if (!rec.is_atom()) {
    return type_error("record", rec);
  }
  return BResult::raise(make_error("dot", f));
}

}  // namespace ks
