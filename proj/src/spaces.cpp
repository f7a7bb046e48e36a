#include <unordered_map>

#include "kernelspace/vm.hpp"

namespace ks {

namespace {

bool is_procedure(Term t) { return t.tag == Tag::Proc || t.tag == Tag::Builtin; }

}  // namespace

void VM::check_child(SpaceId s, SpaceId caller) {
  if (s < 0 || static_cast<std::size_t>(s) >= store_.space_count() || s == kTopSpace)
    throw UsageError("not a computation space");
  if (store_.state(s) == SpaceState::Merged) throw UsageError("space has been merged");
  if (store_.parent(s) != store_.resolve(caller)) throw UsageError("space is not a child of the current space");
}

SpaceId VM::child_space(Term t, SpaceId caller, VarId* wait) {
  Term v = store_.deref(t, caller);
  if (v.is_var()) {
    *wait = v.v;
    return kNoSpace;
  }
  if (v.tag != Tag::Space) throw UsageError("not a computation space");
  return static_cast<SpaceId>(v.v);
}

SpaceId VM::op_new_space(Term proc, SpaceId caller) {
  Term p = store_.deref(proc, caller);
  if (!is_procedure(p)) throw UsageError("NewSpace needs a procedure");
  SpaceId s = store_.new_space(store_.resolve(caller));
  Term root = store_.fresh(s);
  info(s).root = root;
  ++stats_.spaces_created;
  audit("NewSpace");
  spawn_apply(s, p, {root});
  return s;
}

std::optional<Term> VM::op_ask_now(SpaceId s, SpaceId caller) {
  check_child(s, caller);
  audit("Ask");
  if (store_.state(s) == SpaceState::Failed) return atom_term("failed");
  if (info(s).stable) return status_term(s);
  return std::nullopt;
}

ThreadId VM::op_commit(SpaceId s, std::int64_t i, SpaceId caller) {
  check_child(s, caller);
  if (store_.state(s) == SpaceState::Failed) throw UsageError("space has failed");
  auto& in = info(s);
  if (!in.stable || !in.choice) throw UsageError("space is not distributable");
  if (i < 1 || i > in.choice->n) throw UsageError("alternative out of range");
  audit("Commit");
  auto choice = *in.choice;
  in.choice.reset();
  Thread& t = threads_[static_cast<std::size_t>(choice.thread)];
  push_tell(t, choice.result, Term::integer(i));
  t.state = ThreadState::Runnable;
  activate(t.space);
  trace(t, "commit(" + std::to_string(i) + ")");
  enqueue(t.id, cfg_.reverse_queue);
  return t.id;
}

void VM::op_inject(SpaceId s, Term proc, SpaceId caller) {
  check_child(s, caller);
  if (store_.state(s) == SpaceState::Failed) throw UsageError("cannot inject into a failed space");
  Term p = store_.deref(proc, caller);
  if (!is_procedure(p)) throw UsageError("Inject needs a procedure");
  audit("Inject");
  spawn_apply(s, p, {info(s).root});
}

namespace {

// Copies the contents of a space subtree into freshly created spaces.
class Copier {
 public:
  Copier(Store& store, std::vector<Closure>& closures, const std::unordered_map<SpaceId, SpaceId>& smap)
      : store_(store), closures_(closures), smap_(smap) {}

  SpaceId map_space(SpaceId s) const {
    auto it = smap_.find(store_.resolve(s));
    return it == smap_.end() ? kNoSpace : it->second;
  }

  Term copy(Term t) {
    switch (t.tag) {
      case Tag::Var: {
        if (auto it = vars_.find(t.v); it != vars_.end()) return Term::var(it->second);
        SpaceId home = map_space(store_.home(t.v));
        if (home == kNoSpace) return t;
        VarId nv = store_.copy_var(t.v, home);
        vars_.emplace(t.v, nv);
        var_work_.push_back(t.v);
        return Term::var(nv);
      }
      case Tag::Record: {
        if (auto it = records_.find(t.v); it != records_.end()) return Term::record(it->second);
        const auto& h = store_.record_header(t);
        SpaceId owner = map_space(h.owner);
        if (owner == kNoSpace) return t;
        std::vector<Term> args(h.args);
        Term nr = store_.make_record(h.label, h.arity, args, owner);
        records_.emplace(t.v, nr.v);
        rec_work_.push_back(t.v);
        return nr;
      }
      case Tag::Proc: {
        if (auto it = procs_.find(t.v); it != procs_.end()) return Term::proc(it->second);
        Closure cl = closures_[static_cast<std::size_t>(t.v)];
        SpaceId owner = map_space(cl.owner);
        if (owner == kNoSpace) return t;
        auto id = static_cast<std::int64_t>(closures_.size());
        closures_.push_back(Closure{cl.def, nullptr, owner});
        procs_.emplace(t.v, id);
        closures_[static_cast<std::size_t>(id)].captured = env(cl.captured);
        return Term::proc(id);
      }
      case Tag::Space: {
        SpaceId m = map_space(static_cast<SpaceId>(t.v));
        return m == kNoSpace ? t : Term::space(m);
      }
      default:
        return t;
    }
  }

  std::shared_ptr<const std::vector<Term>> env(const std::shared_ptr<const std::vector<Term>>& e) {
    if (!e) return e;
    if (auto it = envs_.find(e.get()); it != envs_.end()) return it->second;
    auto out = std::make_shared<std::vector<Term>>();
    envs_.emplace(e.get(), out);
    out->reserve(e->size());
    for (auto x : *e) out->push_back(copy(x));
    return out;
  }

  FramePtr frame(const FramePtr& f) {
    if (!f) return f;
    if (auto it = frames_.find(f.get()); it != frames_.end()) return it->second;
    auto out = std::make_shared<Frame>();
    frames_.emplace(f.get(), out);
    out->slots.reserve(f->slots.size());
    for (auto x : f->slots) out->slots.push_back(copy(x));
    out->captured = env(f->captured);
    return out;
  }

  VarId var(VarId v) { return copy(Term::var(v)).v; }
  const std::unordered_map<VarId, VarId>& var_map() const { return vars_; }

  // Finishes copying variables and records discovered so far.
  void drain() {
    while (!var_work_.empty() || !rec_work_.empty()) {
      if (!var_work_.empty()) {
        VarId v = var_work_.back();
        var_work_.pop_back();
        Term ref = store_.var(v).ref;
        if (ref != Term::var(v)) {
          Term c = copy(ref);
          store_.var(vars_.at(v)).ref = c;
        }
        continue;
      }
      std::int64_t r = rec_work_.back();
      rec_work_.pop_back();
      std::size_t n = store_.record_header(Term::record(r)).args.size();
      for (std::size_t i = 0; i < n; ++i) {
        Term c = copy(store_.record_header(Term::record(r)).args[i]);
        store_.mutable_args(Term::record(records_.at(r)))[i] = c;
      }
    }
  }

 private:
  Store& store_;
  std::vector<Closure>& closures_;
  const std::unordered_map<SpaceId, SpaceId>& smap_;
  std::unordered_map<VarId, VarId> vars_;
  std::unordered_map<std::int64_t, std::int64_t> records_;
  std::unordered_map<std::int64_t, std::int64_t> procs_;
  std::unordered_map<const void*, std::shared_ptr<std::vector<Term>>> envs_;
  std::unordered_map<const void*, FramePtr> frames_;
  std::vector<VarId> var_work_;
  std::vector<std::int64_t> rec_work_;
};

}  // namespace

SpaceId VM::op_clone(SpaceId s, SpaceId caller) {
  check_child(s, caller);
  if (store_.state(s) == SpaceState::Failed) throw UsageError("cannot clone a failed space");
  if (!info(s).stable) throw UsageError("space is not stable");
  audit("Clone");
  auto olds = subtree(s);
  std::unordered_map<SpaceId, SpaceId> smap;
  for (auto x : olds) {
    SpaceId parent = x == s ? store_.parent(s) : smap.at(store_.parent(x));
    smap[x] = store_.new_space(parent);
    ++stats_.spaces_created;
  }
  info_.resize(store_.space_count());
  Copier cp(store_, closures_, smap);
  std::unordered_map<ThreadId, ThreadId> tmap;
  std::vector<PropId> new_props;
  for (auto x : olds) {
    SpaceId nx = smap.at(x);
    auto bindings = store_.space(x).bindings;
    for (const auto& [v, t] : bindings) {
      VarId nv = cp.var(v);
      Term nt = cp.copy(t);
      store_.set_binding(nv, nt, nx);
    }
    auto domains = store_.space(x).domains;
    for (const auto& [v, d] : domains) store_.set_domain(cp.var(v), nx, d);

    auto tids = info_[static_cast<std::size_t>(x)].threads;
    for (auto tid : tids) {
      const Thread& ot = threads_[static_cast<std::size_t>(tid)];
      if (ot.state != ThreadState::Suspended && ot.state != ThreadState::ChooseWait) continue;
      auto nid = static_cast<ThreadId>(threads_.size());
      threads_.emplace_back();
      Thread& nt = threads_.back();
      nt.id = nid;
      nt.space = nx;
      nt.state = ot.state;
      nt.epoch = 1;
      for (const auto& c : ot.stack) {
        Cont k = c;
        k.frame = cp.frame(c.frame);
        if (c.kind == Cont::Tell) {
          k.a = cp.copy(c.a);
          k.b = cp.copy(c.b);
        }
        nt.stack.push_back(std::move(k));
      }
      for (const auto& h : ot.handlers) nt.handlers.push_back(Handler{h.depth, h.stmt, cp.frame(h.frame)});
      if (ot.state == ThreadState::Suspended) {
        nt.waiting_on = cp.var(ot.waiting_on);
        store_.add_waiter(nt.waiting_on, Waiter{Waiter::Thread, nx, nid, nt.epoch});
      }
      info_[static_cast<std::size_t>(nx)].threads.push_back(nid);
      tmap[tid] = nid;
    }

    auto pids = info_[static_cast<std::size_t>(x)].props;
    for (auto pid : pids) {
      if (props_[static_cast<std::size_t>(pid)].dead) continue;
      Propagator np = props_[static_cast<std::size_t>(pid)];
      np.space = nx;
      np.queued = false;
      for (auto& v : np.vars) v = cp.copy(v);
      auto nid = static_cast<PropId>(props_.size());
      props_.push_back(np);
      new_props.push_back(nid);
      info_[static_cast<std::size_t>(nx)].props.push_back(nid);
    }
  }
  for (auto x : olds) {
    SpaceId nx = smap.at(x);
    const SpaceInfo& oi = info_[static_cast<std::size_t>(x)];
    SpaceInfo& ni = info_[static_cast<std::size_t>(nx)];
    ni.stable = oi.stable;
    ni.root = cp.copy(oi.root);
    if (oi.choice) ni.choice = SpaceInfo::Choice{tmap.at(oi.choice->thread), oi.choice->n, cp.copy(oi.choice->result)};
    for (const auto& a : oi.asks) {
      auto it = smap.find(store_.resolve(a.asker));
      if (it != smap.end()) ni.asks.push_back(SpaceInfo::Ask{cp.copy(a.answer), it->second});
    }
  }
  std::unordered_map<VarId, bool> seen;
  for (;;) {
    cp.drain();
    std::vector<std::pair<VarId, VarId>> todo;
    for (const auto& [o, n] : cp.var_map())
      if (!seen.count(o)) todo.emplace_back(o, n);
    if (todo.empty()) break;
    for (const auto& [o, n] : todo) {
      seen[o] = true;
      auto it = triggers_.find(o);
      if (it == triggers_.end()) continue;
      Trigger tr = it->second;
      SpaceId sp = cp.map_space(tr.space);
      triggers_[n] = Trigger{cp.copy(tr.proc), sp == kNoSpace ? tr.space : sp};
    }
  }
  for (auto id : new_props) {
    const auto& p = props_[static_cast<std::size_t>(id)];
    for (auto v : p.vars) {
      Term d = store_.deref(v, p.space);
      if (d.is_var()) store_.add_waiter(d.v, Waiter{Waiter::Prop, p.space, id, 0});
    }
  }
  return smap.at(s);
}

Term VM::op_merge(SpaceId s, SpaceId caller, bool& consistent) {
  consistent = true;
  check_child(s, caller);
  if (store_.state(s) == SpaceState::Failed) throw UsageError("cannot merge a failed space");
  if (!info(s).stable) throw UsageError("space is not stable");
  if (info(s).choice) throw UsageError("space is not succeeded");
  audit("Merge");
  SpaceId p = store_.parent(s);
  auto locals = store_.space(s).locals;
  auto bindings = store_.space(s).bindings;
  auto domains = store_.space(s).domains;
  auto children = store_.space(s).children;
  for (auto v : locals) store_.rehome(v, p);
  for (auto c : children) store_.reparent(c, p);
  store_.mark_merged(s, p);
  Term root = info(s).root;
  auto threads = std::move(info(s).threads);
  auto props = std::move(info(s).props);
  info(s).threads.clear();
  info(s).props.clear();
  info(s).asks.clear();
  auto& pi = info(p);
  for (auto id : threads) {
    Thread& t = threads_[static_cast<std::size_t>(id)];
    if (t.state == ThreadState::Terminated || t.state == ThreadState::Dead) continue;
    t.space = p;
    pi.threads.push_back(id);
  }
  for (auto id : props) {
    props_[static_cast<std::size_t>(id)].space = p;
    if (!props_[static_cast<std::size_t>(id)].dead) info(p).props.push_back(id);
  }
  for (const auto& [v, d] : domains)
    if (store_.narrow(Term::var(v), d, p) == Narrow::Fail) consistent = false;
  for (const auto& [v, t] : bindings)
    if (store_.unify(Term::var(v), t, p).status == Outcome::Fail) consistent = false;
  return root;
}

SpaceId VM::space_new(Term proc) {
  auto s = op_new_space(proc, kTopSpace);
  settle();
  return s;
}

Term VM::space_ask(SpaceId s) {
  settle();
  auto st = op_ask_now(s, kTopSpace);
  return st ? *st : atom_term("unstable");
}

void VM::space_commit(SpaceId s, std::int64_t i) {
  op_commit(s, i, kTopSpace);
  settle();
}

SpaceId VM::space_clone(SpaceId s) {
  settle();
  return op_clone(s, kTopSpace);
}

void VM::space_inject(SpaceId s, Term proc) {
  op_inject(s, proc, kTopSpace);
  settle();
}

Term VM::space_merge(SpaceId s) {
  settle();
  bool ok = true;
  Term r = op_merge(s, kTopSpace, ok);
  settle();
  if (!ok) throw UsageError("merge made the store inconsistent");
  return r;
}

VM::BResult VM::b_new_space(Thread& t, std::span<const Term> a) {
  Term p = store_.deref(a[0], t.space);
  if (p.is_var()) return BResult::suspend(p.v);
  if (!is_procedure(p)) return type_error("procedure", p);
  SpaceId s = op_new_space(p, t.space);
  push_tell(t, a[1], Term::space(s));
  return BResult::done();
}

VM::BResult VM::b_choose(Thread& t, std::span<const Term> a) {
  BResult r;
  std::int64_t n;
  if (!int_arg(a[0], t.space, n, r)) return r;
  SpaceId s = store_.resolve(t.space);
  if (s == kTopSpace) return BResult::raise(make_error("space", atom_term("Choose in the top-level space")));
  auto& in = info(s);
  if (in.choice) return BResult::raise(make_error("space", atom_term("space already has a choice point")));
  if (n < 1) return BResult::raise(make_error("space", atom_term("Choose needs a positive count")));
  in.choice = SpaceInfo::Choice{t.id, n, a[1]};
  t.state = ThreadState::ChooseWait;
  ++stats_.choose_events;
  audit("Choose");
  trace(t, "choose(" + std::to_string(n) + ")");
  deactivate(t.space);
  return BResult::block();
}

VM::BResult VM::b_ask(Thread& t, std::span<const Term> a) {
  VarId wait = -1;
  SpaceId s = child_space(a[0], t.space, &wait);
  if (s == kNoSpace) return BResult::suspend(wait);
  auto st = op_ask_now(s, t.space);
  if (st) {
    push_tell(t, a[1], *st);
  } else {
    info(s).asks.push_back(SpaceInfo::Ask{a[1], store_.resolve(t.space)});
    if (info(s).active == 0) pending_checks_.push_back(s);
  }
  return BResult::done();
}

// Commit, Clone and Merge issued from a program wait for stability the
// same way Ask does; the host API raises instead.
bool VM::await_stable(Thread& t, SpaceId s, BResult& r) {
  if (store_.state(s) != SpaceState::Live || info(s).stable) return true;
  Term answer = store_.fresh(store_.resolve(t.space));
  info(s).asks.push_back(SpaceInfo::Ask{answer, store_.resolve(t.space)});
  if (info(s).active == 0) pending_checks_.push_back(s);
  r = BResult::suspend(answer.v);
  return false;
}

VM::BResult VM::b_commit(Thread& t, std::span<const Term> a) {
  VarId wait = -1;
  SpaceId s = child_space(a[0], t.space, &wait);
  if (s == kNoSpace) return BResult::suspend(wait);
  if (BResult w; !await_stable(t, s, w)) return w;
  BResult r;
  std::int64_t i;
  if (!int_arg(a[1], t.space, i, r)) return r;
  op_commit(s, i, t.space);
  return r;
}

VM::BResult VM::b_clone(Thread& t, std::span<const Term> a) {
  VarId wait = -1;
  SpaceId s = child_space(a[0], t.space, &wait);
  if (s == kNoSpace) return BResult::suspend(wait);
  if (BResult w; !await_stable(t, s, w)) return w;
  SpaceId c = op_clone(s, t.space);
  push_tell(t, a[1], Term::space(c));
  return BResult::done();
}

VM::BResult VM::b_inject(Thread& t, std::span<const Term> a) {
  VarId wait = -1;
  SpaceId s = child_space(a[0], t.space, &wait);
  if (s == kNoSpace) return BResult::suspend(wait);
  Term p = store_.deref(a[1], t.space);
  if (p.is_var()) return BResult::suspend(p.v);
  op_inject(s, p, t.space);
  return BResult::done();
}

VM::BResult VM::b_merge(Thread& t, std::span<const Term> a) {
  VarId wait = -1;
  SpaceId s = child_space(a[0], t.space, &wait);
  if (s == kNoSpace) return BResult::suspend(wait);
  if (BResult w; !await_stable(t, s, w)) return w;
  bool ok = true;
  Term root = op_merge(s, t.space, ok);
  if (!ok) return BResult::fail();
  push_tell(t, a[1], root);
  return BResult::done();
}

}  // namespace ks
