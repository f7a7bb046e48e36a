#include "kernelspace/vm.hpp"

#include <algorithm>

#include "kernelspace/prelude.hpp"

namespace ks {

VM::VM(RunConfig cfg) : cfg_(std::move(cfg)) {
  store_.set_listener(this);
  info_.resize(1);
  const auto& bs = builtins();
  for (std::size_t i = 0; i < bs.size(); ++i) {
    int g = scope_.declare(bs[i].name);
    globals_.resize(static_cast<std::size_t>(scope_.count));
    globals_[static_cast<std::size_t>(g)] = Term::builtin(static_cast<std::int64_t>(i));
  }
  auto trace = std::move(cfg_.trace);
  cfg_.trace = nullptr;
  load(prelude_source());
  run();
  cfg_.trace = std::move(trace);

  by_need_call_ = make_stmt(K::Apply);
  Ident callee;
  callee.name = "ByNeedRun";
  callee.kind = RefKind::Global;
  callee.index = scope_.index.at("ByNeedRun");
  by_need_call_->ids.push_back(callee);
  for (int i = 0; i < 2; ++i) {
    Ident a;
    a.kind = RefKind::Slot;
    a.index = i;
    by_need_call_->ids.push_back(a);
  }
  stats_ = Stats{};
  log_.clear();
}

void VM::load(std::string_view source) {
  auto prog = compile(source, scope_);
  globals_.resize(static_cast<std::size_t>(scope_.count));
  for (int g : prog.new_globals) globals_[static_cast<std::size_t>(g)] = store_.fresh(kTopSpace);
  auto frame = std::make_shared<Frame>();
  frame->slots.resize(static_cast<std::size_t>(prog.frame_size));
  Cont c;
  c.stmt = prog.body.get();
  c.frame = std::move(frame);
  programs_.push_back(std::move(prog.body));
  spawn(kTopSpace, std::move(c));
}

SpaceInfo& VM::info(SpaceId s) {
  if (static_cast<std::size_t>(s) >= info_.size()) info_.resize(store_.space_count());
  return info_[static_cast<std::size_t>(s)];
}

void VM::trace(ThreadId id, SpaceId s, const std::string& event) const {
  if (cfg_.trace) cfg_.trace("T" + std::to_string(id) + "@S" + std::to_string(s) + " " + event);
}

void VM::trace(const Thread& t, const std::string& event) const {
  if (cfg_.trace) trace(t.id, store_.resolve(t.space), event);
}

ThreadId VM::spawn(SpaceId s, Cont c) {
  s = store_.resolve(s);
  auto id = static_cast<ThreadId>(threads_.size());
  threads_.emplace_back();
  Thread& t = threads_.back();
  t.id = id;
  t.space = s;
  t.stack.push_back(std::move(c));
  t.state = ThreadState::Runnable;
  info(s).threads.push_back(id);
  activate(s);
  trace(t, "spawn");
  enqueue(id, cfg_.reverse_queue);
  return id;
}

ThreadId VM::spawn_apply(SpaceId s, Term proc, std::vector<Term> args) {
  std::size_t n = args.size();
  if (apply_stmts_.size() <= n) apply_stmts_.resize(n + 1);
  if (!apply_stmts_[n]) {
    auto st = make_stmt(K::Apply);
    for (std::size_t i = 0; i <= n; ++i) {
      Ident a;
      a.kind = RefKind::Slot;
      a.index = static_cast<int>(i);
      st->ids.push_back(a);
    }
    apply_stmts_[n] = std::move(st);
  }
  auto frame = std::make_shared<Frame>();
  frame->slots.push_back(proc);
  for (auto a : args) frame->slots.push_back(a);
  Cont c;
  c.stmt = apply_stmts_[n].get();
  c.frame = std::move(frame);
  return spawn(s, std::move(c));
}

void VM::enqueue(ThreadId id, bool front) {
  Thread& t = threads_[static_cast<std::size_t>(id)];
  if (t.queued) return;
  t.queued = true;
  if (front) queue_.push_front(id);
  else queue_.push_back(id);
}

void VM::activate(SpaceId s) {
  for (SpaceId x = store_.resolve(s); x != kTopSpace && x != kNoSpace; x = store_.parent(x)) {
    auto& in = info(x);
    ++in.active;
    in.stable = false;
  }
}

void VM::deactivate(SpaceId s) {
  for (SpaceId x = store_.resolve(s); x != kTopSpace && x != kNoSpace; x = store_.parent(x)) {
    if (--info(x).active == 0) pending_checks_.push_back(x);
  }
}

RunStatus VM::run() {
  budget_hit_ = false;
  settle();
  while (!queue_.empty()) {
    ThreadId id = queue_.front();
    queue_.pop_front();
    Thread* t = &threads_[static_cast<std::size_t>(id)];
    t->queued = false;
    if (t->state != ThreadState::Runnable) continue;
    for (std::int64_t k = 0; k < cfg_.slice; ++k) {
      if (stats_.reductions >= cfg_.max_reductions) {
        budget_hit_ = true;
        enqueue(id, true);
        return RunStatus::Budget;
      }
      step(*t);
      ++stats_.reductions;
      settle();
      if (t->state != ThreadState::Runnable || t->queued) break;
    }
    if (t->state == ThreadState::Runnable) enqueue(id, false);
  }
  return blocked().empty() ? RunStatus::Halted : RunStatus::Quiescent;
}

void VM::settle() {
  for (;;) {
    drain_agenda();
    if (!pending_fails_.empty()) {
      auto fails = std::move(pending_fails_);
      pending_fails_.clear();
      for (auto s : fails) fail_space(s);
      continue;
    }
    if (!pending_checks_.empty()) {
      auto checks = std::move(pending_checks_);
      pending_checks_.clear();
      std::sort(checks.begin(), checks.end());
      checks.erase(std::unique(checks.begin(), checks.end()), checks.end());
      std::stable_sort(checks.begin(), checks.end(), [this](SpaceId a, SpaceId b) {
        return store_.space(a).depth > store_.space(b).depth;
      });
      for (auto s : checks) check_stable(s);
      continue;
    }
    break;
  }
}

Term VM::get(const Ident& id, const Frame& f) const {
  switch (id.kind) {
    case RefKind::Slot:
      return f.slots[static_cast<std::size_t>(id.index)];
    case RefKind::Captured:
      return (*f.captured)[static_cast<std::size_t>(id.index)];
    case RefKind::Global:
      return globals_[static_cast<std::size_t>(id.index)];
    default:
      throw UsageError("unresolved identifier " + id.name);
  }
}

Term& VM::slot(const Ident& id, Frame& f) { return f.slots[static_cast<std::size_t>(id.index)]; }

Term VM::make_error(const std::string& kind, Term info) {
  static const ArityId arity = intern_arity({atom_term("kind"), atom_term("what")});
  Term args[2] = {atom_term(kind), info};
  return store_.make_record(Term::atom(atoms::error()), arity, args, kTopSpace);
}

void VM::step(Thread& t) {
  Cont c = t.stack.back();
  switch (c.kind) {
    case Cont::PopHandler:
      t.stack.pop_back();
      t.handlers.pop_back();
      break;
    case Cont::Tell:
      t.stack.pop_back();
      tell(t, c.a, c.b);
      break;
    case Cont::Exec:
      exec(t, c);
      break;
  }
  if (t.state == ThreadState::Runnable && t.stack.empty()) terminate(t);
}

void VM::push_tell(Thread& t, Term a, Term b) {
  Cont c;
  c.kind = Cont::Tell;
  c.a = a;
  c.b = b;
  t.stack.push_back(std::move(c));
}

void VM::tell(Thread& t, Term a, Term b) {
  auto r = store_.unify(a, b, t.space);
  switch (r.status) {
    case Outcome::Ok:
      break;
    case Outcome::Suspend:
      push_tell(t, a, b);
      suspend(t, r.var);
      break;
    case Outcome::Fail:
      failure(t);
      break;
  }
}

void VM::exec(Thread& t, const Cont& c) {
  const Stmt& s = *c.stmt;
  Frame& f = *c.frame;
  switch (s.kind) {
    case K::Skip:
      t.stack.pop_back();
      return;
    case K::Seq:
      t.stack.pop_back();
      for (std::size_t i = s.body.size(); i-- > 0;) {
        Cont k;
        k.stmt = s.body[i].get();
        k.frame = c.frame;
        t.stack.push_back(std::move(k));
      }
      return;
    case K::Eq:
      t.stack.pop_back();
      tell(t, get(s.ids[0], f), get(s.ids[1], f));
      return;
    case K::Lit:
      t.stack.pop_back();
      tell(t, get(s.ids[0], f), s.lit);
      return;
    case K::Rec: {
      std::vector<Term> args;
      args.reserve(s.ids.size() - 1);
      for (std::size_t i = 1; i < s.ids.size(); ++i) args.push_back(get(s.ids[i], f));
      Term r = store_.make_record(s.lit, s.arity, args, store_.resolve(t.space));
      Term x = get(s.ids[0], f);
      t.stack.pop_back();
      tell(t, x, r);
      return;
    }
    case K::Local: {
      for (const auto& id : s.ids) slot(id, f) = store_.fresh(store_.resolve(t.space));
      Cont k;
      k.stmt = s.body[0].get();
      k.frame = c.frame;
      t.stack.back() = std::move(k);
      return;
    }
    case K::If: {
      Term v = store_.deref(get(s.ids[0], f), t.space);
      if (v.is_var()) {
        suspend(t, v.v);
        return;
      }
      t.stack.pop_back();
      if (v == bool_term(true) || v == bool_term(false)) {
        Cont k;
        k.stmt = s.body[v == bool_term(true) ? 0 : 1].get();
        k.frame = c.frame;
        t.stack.push_back(std::move(k));
      } else {
        raise(t, make_error("type", atom_term("if")));
      }
      return;
    }
    case K::Case: {
      Term v = store_.deref(get(s.ids[0], f), t.space);
      if (v.is_var()) {
        suspend(t, v.v);
        return;
      }
      bool match;
      if (s.arity < 0) {
        match = v == s.lit;
      } else {
        match = v.is_record() && store_.record_header(v).label == s.lit && store_.record_header(v).arity == s.arity;
      }
      t.stack.pop_back();
      if (match && s.arity >= 0) {
        const auto& args = store_.record_header(v).args;
        for (std::size_t i = 0; i < args.size(); ++i) slot(s.ids[i + 1], f) = args[i];
      }
      Cont k;
      k.stmt = s.body[match ? 0 : 1].get();
      k.frame = c.frame;
      t.stack.push_back(std::move(k));
      return;
    }
    case K::Proc: {
      auto env = std::make_shared<std::vector<Term>>();
      env->reserve(s.captures.size());
      for (const auto& cap : s.captures) env->push_back(get(cap, f));
      auto id = static_cast<std::int64_t>(closures_.size());
      closures_.push_back(Closure{&s, std::move(env), store_.resolve(t.space)});
      t.stack.pop_back();
      tell(t, get(s.ids[0], f), Term::proc(id));
      return;
    }
    case K::Apply: {
      Term callee = store_.deref(get(s.ids[0], f), t.space);
      if (callee.is_var()) {
        suspend(t, callee.v);
        return;
      }
      std::vector<Term> args;
      args.reserve(s.ids.size() - 1);
      for (std::size_t i = 1; i < s.ids.size(); ++i) args.push_back(get(s.ids[i], f));
      apply(t, callee, args, c);
      return;
    }
    case K::Thread: {
      t.stack.pop_back();
      Cont k;
      k.stmt = s.body[0].get();
      k.frame = c.frame;
      spawn(t.space, std::move(k));
      return;
    }
    case K::Try: {
      t.stack.pop_back();
      Cont pop;
      pop.kind = Cont::PopHandler;
      t.stack.push_back(std::move(pop));
      t.handlers.push_back(Handler{t.stack.size() - 1, &s, c.frame});
      Cont k;
      k.stmt = s.body[0].get();
      k.frame = c.frame;
      t.stack.push_back(std::move(k));
      return;
    }
    case K::Raise: {
      Term e = get(s.ids[0], f);
      t.stack.pop_back();
      raise(t, e);
      return;
    }
  }
}

void VM::apply(Thread& t, Term callee, std::span<const Term> args, const Cont& self) {
  if (callee.tag == Tag::Proc) {
    const Closure& cl = closures_[static_cast<std::size_t>(callee.v)];
    std::size_t n = cl.def->ids.size() - 1;
    t.stack.pop_back();
    if (n != args.size()) {
      raise(t, make_error("arity", callee));
      return;
    }
    auto frame = std::make_shared<Frame>();
    frame->slots.resize(static_cast<std::size_t>(cl.def->frame_size));
    std::copy(args.begin(), args.end(), frame->slots.begin());
    frame->captured = cl.captured;
    Cont k;
    k.stmt = cl.def->body[0].get();
    k.frame = std::move(frame);
    t.stack.push_back(std::move(k));
    return;
  }
  if (callee.tag == Tag::Builtin) {
    const auto& def = builtins()[static_cast<std::size_t>(callee.v)];
    t.stack.pop_back();
    if (static_cast<std::size_t>(def.arity) != args.size()) {
      raise(t, make_error("arity", callee));
      return;
    }
    BResult r;
    try {
      r = (this->*def.fn)(t, args);
    } catch (const UsageError& e) {
      r = BResult::raise(make_error("space", atom_term(e.what())));
    }
    switch (r.kind) {
      case BResult::Done:
      case BResult::Block:
        break;
      case BResult::Suspend:
        t.stack.push_back(self);
        suspend(t, r.var);
        break;
      case BResult::Raise:
        raise(t, r.exc);
        break;
      case BResult::Fail:
        failure(t);
        break;
    }
    return;
  }
  t.stack.pop_back();
  raise(t, make_error("type", atom_term("apply")));
}

void VM::suspend(Thread& t, VarId v) {
  t.state = ThreadState::Suspended;
  t.waiting_on = v;
  ++t.epoch;
  store_.add_waiter(v, Waiter{Waiter::Thread, t.space, t.id, t.epoch});
  trace(t, "suspend(V" + std::to_string(v) + ")");
  deactivate(t.space);
  if (store_.has_trigger(v)) need(v, t.space);
}

void VM::terminate(Thread& t) {
  t.state = ThreadState::Terminated;
  t.stack.clear();
  t.stack.shrink_to_fit();
  t.handlers.clear();
  trace(t, "exit");
  deactivate(t.space);
}

void VM::raise(Thread& t, Term exc) {
  trace(t, "raise");
  if (!t.handlers.empty()) {
    Handler h = t.handlers.back();
    t.handlers.pop_back();
    t.stack.resize(h.depth);
    slot(h.stmt->ids[0], *h.frame) = exc;
    Cont k;
    k.stmt = h.stmt->body[1].get();
    k.frame = h.frame;
    t.stack.push_back(std::move(k));
    return;
  }
  SpaceId s = store_.resolve(t.space);
  if (s == kTopSpace) {
    uncaught_.push_back(render(exc, s));
    terminate(t);
  } else {
    fail_space(s);
  }
}

void VM::failure(Thread& t) {
  SpaceId s = store_.resolve(t.space);
  if (s == kTopSpace) {
    static const ArityId arity = intern_arity({atom_term("debug")});
    Term unit = Term::atom(atoms::unit());
    raise(t, store_.make_record(Term::atom(atoms::failure()), arity, std::span<const Term>(&unit, 1), kTopSpace));
  } else {
    fail_space(s);
  }
}

void VM::wake(const Waiter& w) {
  if (w.kind == Waiter::Thread) {
    Thread& t = threads_[static_cast<std::size_t>(w.id)];
    if (t.state != ThreadState::Suspended || t.epoch != w.epoch) return;
    t.state = ThreadState::Runnable;
    t.waiting_on = -1;
    activate(t.space);
    trace(t, "wake");
    enqueue(t.id, cfg_.reverse_queue);
  } else {
    Propagator& p = props_[static_cast<std::size_t>(w.id)];
    if (p.dead || p.queued) return;
    p.queued = true;
    agenda_.push_back(w.id);
    activate(p.space);
  }
}

bool VM::stale(const Waiter& w) const {
  if (w.kind == Waiter::Thread) {
    const Thread& t = threads_[static_cast<std::size_t>(w.id)];
    return t.state != ThreadState::Suspended || t.epoch != w.epoch;
  }
  const Propagator& p = props_[static_cast<std::size_t>(w.id)];
  return p.dead || !store_.live(store_.resolve(p.space));
}

void VM::need(VarId v, SpaceId) {
  if (!store_.has_trigger(v)) return;
  store_.set_trigger(v, false);
  auto it = triggers_.find(v);
  if (it == triggers_.end()) return;
  Trigger tr = it->second;
  triggers_.erase(it);
  SpaceId sp = store_.resolve(tr.space);
  if (!store_.live(sp)) return;
  ++stats_.trigger_firings;
  auto frame = std::make_shared<Frame>();
  frame->slots = {tr.proc, Term::var(v)};
  Cont c;
  c.stmt = by_need_call_.get();
  c.frame = std::move(frame);
  spawn(sp, std::move(c));
}

void VM::space_inconsistent(SpaceId s) { pending_fails_.push_back(s); }

void VM::drain_agenda() {
  while (!agenda_.empty()) {
    PropId id = agenda_.front();
    agenda_.pop_front();
    SpaceId sp = props_[static_cast<std::size_t>(id)].space;
    SpaceId live = store_.resolve(sp);
    if (!props_[static_cast<std::size_t>(id)].dead && store_.live(live)) {
      auto r = run_prop(props_[static_cast<std::size_t>(id)]);
      if (r == PropResult::Fail) {
        props_[static_cast<std::size_t>(id)].dead = true;
        if (live == kTopSpace) uncaught_.push_back("failure(debug:unit)");
        else pending_fails_.push_back(live);
      } else if (r == PropResult::Entailed) {
        props_[static_cast<std::size_t>(id)].dead = true;
      }
    }
    props_[static_cast<std::size_t>(id)].queued = false;
    deactivate(sp);
  }
}

std::vector<SpaceId> VM::subtree(SpaceId s) const {
  std::vector<SpaceId> out{s};
  for (std::size_t i = 0; i < out.size(); ++i)
    for (auto c : store_.space(out[i]).children)
      if (store_.live(c)) out.push_back(c);
  return out;
}

bool VM::in_subtree(SpaceId x, SpaceId root) const { return store_.descends(x, root); }

Term VM::status_term(SpaceId s) {
  if (store_.state(s) == SpaceState::Failed) return atom_term("failed");
  if (store_.state(s) == SpaceState::Merged) return atom_term("merged");
  auto& in = info(s);
  if (!in.stable) return atom_term("unstable");
  if (in.choice) {
    Term n = Term::integer(in.choice->n);
    return store_.make_tuple(atom_term("alternatives"), std::span<const Term>(&n, 1), kTopSpace);
  }
  return atom_term("succeeded");
}

void VM::check_stable(SpaceId s) {
  if (store_.state(s) != SpaceState::Live || s == kTopSpace) return;
  if (info(s).active > 0) return;
  for (auto x : subtree(s)) {
    auto& ts = info(x).threads;
    std::erase_if(ts, [this](ThreadId id) {
      auto st = threads_[static_cast<std::size_t>(id)].state;
      return st == ThreadState::Terminated || st == ThreadState::Dead;
    });
    for (auto id : ts) {
      const Thread& t = threads_[static_cast<std::size_t>(id)];
      if (t.state != ThreadState::Suspended) continue;
      Term v = store_.deref(Term::var(t.waiting_on), t.space);
      if (!v.is_var() || !in_subtree(store_.home(v.v), s)) return;
    }
  }
  auto& in = info(s);
  in.stable = true;
  auto asks = std::move(in.asks);
  in.asks.clear();
  Term st = status_term(s);
  for (const auto& a : asks) {
    if (store_.live(store_.resolve(a.asker))) store_.unify(a.answer, st, a.asker);
  }
}

void VM::fail_space(SpaceId s) {
  s = store_.resolve(s);
  if (s == kTopSpace || !store_.live(s)) return;
  auto sub = subtree(s);
  store_.mark_failed(s);
  std::vector<SpaceInfo::Ask> outside;
  for (auto x : sub) {
    auto& in = info(x);
    for (auto id : in.threads) {
      Thread& t = threads_[static_cast<std::size_t>(id)];
      if (t.state == ThreadState::Runnable) deactivate(t.space);
      if (t.state != ThreadState::Terminated) {
        t.state = ThreadState::Dead;
        t.stack.clear();
        t.handlers.clear();
      }
    }
    in.threads.clear();
    for (auto p : in.props) props_[static_cast<std::size_t>(p)].dead = true;
    in.props.clear();
    in.choice.reset();
    in.stable = true;
    for (const auto& a : in.asks)
      if (!in_subtree(a.asker, s)) outside.push_back(a);
    in.asks.clear();
  }
  Term failed = atom_term("failed");
  for (const auto& a : outside)
    if (store_.live(store_.resolve(a.asker))) store_.unify(a.answer, failed, a.asker);
}

std::vector<std::string> VM::take_log() {
  std::vector<std::string> out;
  out.reserve(log_.size());
  for (const auto& e : log_) out.push_back(render(e.term, e.space));
  log_.clear();
  return out;
}

std::vector<std::string> VM::take_uncaught() {
  auto out = std::move(uncaught_);
  uncaught_.clear();
  return out;
}

std::vector<std::string> VM::blocked() const {
  std::vector<std::string> out;
  if (info_.empty()) return out;
  for (auto id : info_[0].threads) {
    const Thread& t = threads_[static_cast<std::size_t>(id)];
    if (t.state == ThreadState::Suspended)
      out.push_back("T" + std::to_string(id) + " suspended on V" + std::to_string(t.waiting_on));
  }
  return out;
}

Term VM::global(std::string_view name) const {
  auto it = scope_.index.find(std::string(name));
  if (it == scope_.index.end()) throw UsageError("no global named " + std::string(name));
  return store_.deref(globals_[static_cast<std::size_t>(it->second)], kTopSpace);
}

RunResult run_program(std::string_view source, RunConfig cfg) {
  VM vm(std::move(cfg));
  vm.load(source);
  RunResult r;
  r.status = vm.run();
  r.log = vm.take_log();
  r.uncaught = vm.take_uncaught();
  r.blocked = vm.blocked();
  r.stats = vm.stats();
  return r;
}

}  // namespace ks
