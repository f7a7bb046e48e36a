#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kernelspace/desugar.hpp"
#include "kernelspace/store.hpp"

namespace ks {

struct RunConfig {
  std::int64_t slice = 1000;
  std::int64_t max_reductions = 200'000'000;
  bool reverse_queue = false;
  std::function<void(const std::string&)> trace;  // unset: no tracing
};

enum class RunStatus : std::uint8_t { Halted, Quiescent, Budget };

struct Stats {
  std::int64_t reductions = 0;
  std::int64_t trigger_installs = 0;
  std::int64_t trigger_firings = 0;
  std::int64_t choose_events = 0;
  std::int64_t spaces_created = 0;
  std::int64_t propagator_runs = 0;
  std::map<std::string, std::int64_t> space_ops;
};

struct Frame {
  std::vector<Term> slots;
  std::shared_ptr<const std::vector<Term>> captured;
};
using FramePtr = std::shared_ptr<Frame>;

struct Closure {
  const Stmt* def = nullptr;
  std::shared_ptr<const std::vector<Term>> captured;
  SpaceId owner = kTopSpace;
};

struct Cont {
  enum Kind : std::uint8_t { Exec, PopHandler, Tell } kind = Exec;
  const Stmt* stmt = nullptr;
  FramePtr frame;
  Term a, b;
};

struct Handler {
  std::size_t depth = 0;
  const Stmt* stmt = nullptr;
  FramePtr frame;
};

enum class ThreadState : std::uint8_t { Runnable, Suspended, ChooseWait, Terminated, Dead };

struct Thread {
  ThreadId id = 0;
  SpaceId space = kTopSpace;
  std::vector<Cont> stack;
  std::vector<Handler> handlers;
  ThreadState state = ThreadState::Runnable;
  VarId waiting_on = -1;
  std::uint64_t epoch = 0;
  bool queued = false;
};

struct Propagator {
  enum Kind : std::uint8_t { Linear, Mult, Distinct } kind = Linear;
  enum Rel : std::uint8_t { Eq, Le, Ne } rel = Eq;
  SpaceId space = kTopSpace;
  std::vector<Term> vars;
  std::vector<std::int64_t> coefs;
  std::int64_t c = 0;
  bool queued = false;
  bool dead = false;
};

// Outcome of running one propagator to its own fixpoint.
enum class PropResult : std::uint8_t { Fail, Active, Entailed };

struct SpaceInfo {
  int active = 0;  // runnable threads and queued propagators in the subtree
  bool stable = false;
  Term root;
  std::vector<ThreadId> threads;
  std::vector<PropId> props;
  struct Choice {
    ThreadId thread;
    std::int64_t n;
    Term result;
  };
  std::optional<Choice> choice;
  struct Ask {
    Term answer;
    SpaceId asker;
  };
  std::vector<Ask> asks;
};

class VM : private StoreListener {
 public:
  explicit VM(RunConfig cfg = {});

  // Compiles and queues a program for execution in the top-level space.
  // Throws SyntaxError or CompileError; globals from `declare` persist.
  void load(std::string_view source);
  RunStatus run();

  // Renders and clears the browse log.
  std::vector<std::string> take_log();
  // Uncaught top-level exceptions since the last call.
  std::vector<std::string> take_uncaught();
  // Top-level threads that are suspended, one line per thread.
  std::vector<std::string> blocked() const;

  std::string render(Term t, SpaceId s = kTopSpace) const;
  Term global(std::string_view name) const;
  Term deref(Term t, SpaceId s = kTopSpace) const { return store_.deref(t, s); }

  Store& store() { return store_; }
  const Store& store() const { return store_; }
  const Stats& stats() const { return stats_; }
  RunConfig& config() { return cfg_; }

  // Space operations issued by the host from the top level. They throw
  // UsageError on misuse. ask_status returns the atom `unstable` when the
  // space has not reached stability; call run() first.
  SpaceId space_new(Term proc);
  Term space_ask(SpaceId s);
  void space_commit(SpaceId s, std::int64_t i);
  SpaceId space_clone(SpaceId s);
  void space_inject(SpaceId s, Term proc);
  Term space_merge(SpaceId s);
  Term space_root(SpaceId s) const { return info_.at(s).root; }
  const SpaceInfo& space_info(SpaceId s) const { return info_.at(s); }

  // Propagator access for tests.
  PropId post_linear(std::vector<std::int64_t> coefs, std::vector<Term> vars, Propagator::Rel rel, std::int64_t c,
                     SpaceId s = kTopSpace);
  PropId post_mult(Term x, Term y, Term z, SpaceId s = kTopSpace);
  PropId post_distinct(std::vector<Term> vars, SpaceId s = kTopSpace);
  PropResult run_propagator(PropId p);
  // Runs queued propagators until none is left; false if the space failed.
  bool propagate(SpaceId s = kTopSpace);

 private:
  struct BResult {
    enum Kind : std::uint8_t { Done, Suspend, Raise, Fail, Block } kind = Done;
    VarId var = -1;
    Term exc;
    static BResult done() { return {}; }
    static BResult suspend(VarId v) { return {Suspend, v, {}}; }
    static BResult raise(Term e) { return {Raise, -1, e}; }
    static BResult fail() { return {Fail, -1, {}}; }
    static BResult block() { return {Block, -1, {}}; }
  };
  using BuiltinFn = BResult (VM::*)(Thread&, std::span<const Term>);
  struct BuiltinDef {
    const char* name;
    int arity;
    BuiltinFn fn;
  };
  static const std::vector<BuiltinDef>& builtins();

  struct Trigger {
    Term proc;
    SpaceId space;
  };
  struct Cell {
    Term content;
  };
  struct Port {
    Term tail;
  };
  struct BrowseEntry {
    Term term;
    SpaceId space;
  };

  // StoreListener
  void wake(const Waiter& w) override;
  bool stale(const Waiter& w) const override;
  void need(VarId v, SpaceId s) override;
  void space_inconsistent(SpaceId s) override;

  // Scheduler.
  SpaceInfo& info(SpaceId s);
  ThreadId spawn(SpaceId s, Cont c);
  void enqueue(ThreadId t, bool front);
  void activate(SpaceId s);
  void deactivate(SpaceId s);
  void step(Thread& t);
  void exec(Thread& t, const Cont& c);
  void suspend(Thread& t, VarId v);
  void terminate(Thread& t);
  void raise(Thread& t, Term exc);
  void failure(Thread& t);
  void tell(Thread& t, Term a, Term b);
  void push_tell(Thread& t, Term a, Term b);
  void apply(Thread& t, Term callee, std::span<const Term> args, const Cont& self);
  void settle();
  void drain_agenda();
  void check_stable(SpaceId s);
  void fail_space(SpaceId s);
  bool in_subtree(SpaceId x, SpaceId root) const;
  std::vector<SpaceId> subtree(SpaceId s) const;
  void trace(const Thread& t, const std::string& event) const;
  void trace(ThreadId id, SpaceId s, const std::string& event) const;
  Term get(const Ident& id, const Frame& f) const;
  Term& slot(const Ident& id, Frame& f);
  Term make_error(const std::string& kind, Term info = Term::atom(0));
  Term status_term(SpaceId s);
  void audit(const char* op) { ++stats_.space_ops[op]; }

  // Space operations shared by builtins and the host API. The caller space
  // is the space of the issuing thread.
  SpaceId op_new_space(Term proc, SpaceId caller);
  std::optional<Term> op_ask_now(SpaceId s, SpaceId caller);
  ThreadId op_commit(SpaceId s, std::int64_t i, SpaceId caller);
  SpaceId op_clone(SpaceId s, SpaceId caller);
  void op_inject(SpaceId s, Term proc, SpaceId caller);
  Term op_merge(SpaceId s, SpaceId caller, bool& consistent);
  void check_child(SpaceId s, SpaceId caller);
  SpaceId child_space(Term t, SpaceId caller, VarId* wait);
  bool await_stable(Thread& t, SpaceId s, BResult& r);
  ThreadId spawn_apply(SpaceId s, Term proc, std::vector<Term> args);

  // Propagators.
  PropId add_prop(Propagator p);
  PropId schedule(PropId id);
  PropResult run_prop(Propagator& p);
  PropResult run_linear(Propagator& p);
  PropResult run_mult(Propagator& p);
  PropResult run_distinct(Propagator& p);
  bool ensure_domain(Term x, SpaceId s);

  // Helpers for builtins.
  bool int_arg(Term t, SpaceId s, std::int64_t& out, BResult& r);
  bool list_arg(Term t, SpaceId s, std::vector<Term>& out, BResult& r);
  bool items_arg(Term t, SpaceId s, std::vector<Term>& out, BResult& r);
  BResult type_error(const char* what, Term t);
  bool top_only(Thread& t, BResult& r, const char* what);

  // Builtins.
  BResult b_browse(Thread&, std::span<const Term>);
  BResult b_plus(Thread&, std::span<const Term>);
  BResult b_minus(Thread&, std::span<const Term>);
  BResult b_times(Thread&, std::span<const Term>);
  BResult b_less(Thread&, std::span<const Term>);
  BResult b_leq(Thread&, std::span<const Term>);
  BResult b_equal(Thread&, std::span<const Term>);
  BResult b_not_equal(Thread&, std::span<const Term>);
  BResult b_is_det(Thread&, std::span<const Term>);
  BResult b_wait(Thread&, std::span<const Term>);
  BResult b_new_name(Thread&, std::span<const Term>);
  BResult b_by_need(Thread&, std::span<const Term>);
  BResult b_new_cell(Thread&, std::span<const Term>);
  BResult b_exchange(Thread&, std::span<const Term>);
  BResult b_new_port(Thread&, std::span<const Term>);
  BResult b_send(Thread&, std::span<const Term>);
  BResult b_dot(Thread&, std::span<const Term>);
  BResult b_new_space(Thread&, std::span<const Term>);
  BResult b_choose(Thread&, std::span<const Term>);
  BResult b_ask(Thread&, std::span<const Term>);
  BResult b_commit(Thread&, std::span<const Term>);
  BResult b_clone(Thread&, std::span<const Term>);
  BResult b_inject(Thread&, std::span<const Term>);
  BResult b_merge(Thread&, std::span<const Term>);
  BResult b_fd_decl(Thread&, std::span<const Term>);
  BResult b_fd_tell_dom(Thread&, std::span<const Term>);
  BResult b_fd_linear(Thread&, std::span<const Term>);
  BResult b_fd_mult(Thread&, std::span<const Term>);
  BResult b_fd_distinct(Thread&, std::span<const Term>);
  BResult b_fd_neq(Thread&, std::span<const Term>);
  BResult b_fd_select_ff(Thread&, std::span<const Term>);

  RunConfig cfg_;
  Store store_;
  Stats stats_;
  GlobalScope scope_;
  std::vector<Term> globals_;
  std::vector<StmtPtr> programs_;
  std::vector<Closure> closures_;
  std::vector<Cell> cells_;
  std::vector<Port> ports_;
  std::int64_t names_ = 0;
  std::unordered_map<VarId, Trigger> triggers_;
  std::deque<Thread> threads_;
  std::deque<ThreadId> queue_;
  std::vector<SpaceInfo> info_;
  std::vector<Propagator> props_;
  std::deque<PropId> agenda_;
  std::vector<SpaceId> pending_checks_;
  std::vector<SpaceId> pending_fails_;
  std::vector<BrowseEntry> log_;
  std::vector<std::string> uncaught_;
  StmtPtr by_need_call_;
  std::vector<StmtPtr> apply_stmts_;
  bool budget_hit_ = false;
};

// Convenience: run a complete program in a fresh VM.
struct RunResult {
  RunStatus status = RunStatus::Halted;
  std::vector<std::string> log;
  std::vector<std::string> uncaught;
  std::vector<std::string> blocked;
  Stats stats;
};
RunResult run_program(std::string_view source, RunConfig cfg = {});

}  // namespace ks
