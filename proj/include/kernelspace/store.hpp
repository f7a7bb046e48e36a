#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "kernelspace/domain.hpp"
#include "kernelspace/term.hpp"

namespace ks {

using ArityId = std::int32_t;

struct Arity {
  std::vector<Term> features;  // canonical order
  bool tuple = false;          // features are exactly 1..n
};

// Arities are interned process-wide, like atoms.
ArityId intern_arity(std::vector<Term> features);
ArityId tuple_arity(std::size_t width);
const Arity& arity_info(ArityId a);
int feature_index(ArityId a, Term feature);
void sort_features(std::vector<Term>& features);

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SpaceState : std::uint8_t { Live, Failed, Merged };

struct Waiter {
  enum Kind : std::uint8_t { Thread, Prop } kind = Thread;
  SpaceId space = kTopSpace;
  std::int64_t id = 0;
  std::uint64_t epoch = 0;
};

// Callbacks from the store into the scheduler.
class StoreListener {
 public:
  virtual ~StoreListener() = default;
  virtual void wake(const Waiter& w) = 0;
  virtual bool stale(const Waiter& w) const = 0;
  // A tell tried to determine a variable carrying an unfired trigger.
  virtual void need(VarId v, SpaceId s) = 0;
  // A binding in an ancestor made a descendant inconsistent.
  virtual void space_inconsistent(SpaceId s) = 0;
};

enum class Outcome : std::uint8_t { Ok, Fail, Suspend };

struct TellResult {
  Outcome status = Outcome::Ok;
  VarId var = -1;  // the variable to wait on when suspended
  explicit operator bool() const { return status == Outcome::Ok; }
};

enum class Entail : std::uint8_t { Yes, No, Unknown };

enum class Narrow : std::uint8_t { Fail, NoChange, Changed };

struct RecordView {
  Term label;
  ArityId arity;
  std::span<const Term> args;
};

class Store {
 public:
  struct Var {
    Term ref;  // self when unbound at home
    SpaceId home;
    std::uint8_t flags = 0;
    std::vector<Waiter> waiters;
  };
  struct Space {
    SpaceId parent = kNoSpace;
    SpaceId merged_into = kNoSpace;
    SpaceState state = SpaceState::Live;
    int depth = 0;
    std::unordered_map<VarId, Term> bindings;
    std::unordered_map<VarId, fd::Domain> domains;
    std::vector<VarId> locals;
    std::vector<SpaceId> children;
  };
  struct Record {
    Term label;
    ArityId arity;
    SpaceId owner;
    std::vector<Term> args;
  };

  static constexpr std::uint8_t kTrigger = 1;
  static constexpr std::uint8_t kDomain = 2;
  static constexpr std::uint8_t kShadowed = 4;

  Store();
  void set_listener(StoreListener* l) { listener_ = l; }

  // Space tree.
  SpaceId new_space(SpaceId parent);
  SpaceId parent(SpaceId s) const { return spaces_[s].parent; }
  SpaceState state(SpaceId s) const { return spaces_[s].state; }
  bool live(SpaceId s) const { return spaces_[s].state == SpaceState::Live; }
  SpaceId resolve(SpaceId s) const;
  bool descends(SpaceId s, SpaceId ancestor) const;  // s is ancestor or below it
  std::size_t space_count() const { return spaces_.size(); }
  Space& space(SpaceId s) { return spaces_[s]; }
  const Space& space(SpaceId s) const { return spaces_[s]; }
  void mark_failed(SpaceId s);
  void mark_merged(SpaceId s, SpaceId into);
  void reparent(SpaceId child, SpaceId new_parent);

  // Variables.
  VarId new_var(SpaceId home);
  Term fresh(SpaceId home) { return Term::var(new_var(home)); }
  SpaceId home(VarId v) const { return vars_[v].home; }
  Var& var(VarId v) { return vars_[v]; }
  const Var& var(VarId v) const { return vars_[v]; }
  std::size_t var_count() const { return vars_.size(); }
  bool has_trigger(VarId v) const { return vars_[v].flags & kTrigger; }
  void set_trigger(VarId v, bool on);

  Term deref(Term t, SpaceId s) const;
  bool is_det(Term t, SpaceId s) const { return !deref(t, s).is_var(); }

  // Records. Zero-width records collapse to their label.
  Term make_record(Term label, ArityId arity, std::span<const Term> args, SpaceId owner);
  Term make_tuple(Term label, std::span<const Term> args, SpaceId owner);
  Term make_cons(Term head, Term tail, SpaceId owner);
  Term make_list(std::span<const Term> items, SpaceId owner);
  RecordView record(Term r) const;
  const Record& record_header(Term r) const { return records_[r.v]; }
  std::size_t record_count() const { return records_.size(); }
  // Only valid before the record has been shared.
  Term* mutable_args(Term r) { return records_[r.v].args.data(); }

  // Tell and ask.
  TellResult unify(Term a, Term b, SpaceId s);
  Entail entails(Term x, Term label, ArityId arity, SpaceId s, VarId* wait = nullptr) const;
  Entail equal(Term a, Term b, SpaceId s, VarId* wait = nullptr) const;

  // Waiters.
  void add_waiter(VarId v, const Waiter& w) { vars_[v].waiters.push_back(w); }

  // Finite domains.
  const fd::Domain* domain(VarId v, SpaceId s) const;
  Narrow narrow(Term x, const fd::Domain& d, SpaceId s);

  // Direct binding without consistency checks (used when rebuilding spaces).
  void bind(VarId v, Term t, SpaceId s);
  void set_domain(VarId v, SpaceId s, fd::Domain d);
  // Raw overlay write used by clone; no notification.
  void set_binding(VarId v, Term t, SpaceId s);
  // Moves a variable to another home (merge).
  void rehome(VarId v, SpaceId s);
  void shadow(VarId v, SpaceId s);
  VarId copy_var(VarId from, SpaceId home);

 private:
  TellResult bind_value(VarId v, Term t, SpaceId s);
  TellResult bind_vars(VarId x, VarId y, SpaceId s);
  void notify(VarId v, SpaceId s, bool props_only);
  void reconcile(VarId v, SpaceId s);
  void copy_props(VarId from, VarId to);

  StoreListener* listener_ = nullptr;
  std::vector<Var> vars_;
  std::vector<Space> spaces_;
  std::vector<Record> records_;
  std::unordered_map<VarId, std::vector<SpaceId>> shadows_;
};

}  // namespace ks
