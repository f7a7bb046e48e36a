#include <vector>

#include "kernelspace/vm.hpp"

namespace ks {

namespace {

class Renderer {
 public:
  Renderer(const Store& store, SpaceId s, std::function<int(Term)> proc_arity)
      : store_(store), s_(s), proc_arity_(std::move(proc_arity)) {}

  void term(Term t, bool nested, std::string& out) {
    t = store_.deref(t, s_);
    switch (t.tag) {
      case Tag::Var:
        out += '_';
        return;
      case Tag::Int:
      case Tag::Atom:
        out += render_literal(t);
        return;
      case Tag::Name:
        out += "<Name>";
        return;
      case Tag::Proc:
      case Tag::Builtin:
        out += "<P/" + std::to_string(proc_arity_(t)) + ">";
        return;
      case Tag::Cell:
        out += "<Cell>";
        return;
      case Tag::Port:
        out += "<Port>";
        return;
      case Tag::Space:
        out += "<Space>";
        return;
      case Tag::Record:
        record(t, nested, out);
        return;
    }
  }

 private:
  bool enter(Term r, std::string& out) {
    for (std::size_t i = 0; i < path_.size(); ++i) {
      if (path_[i] == r.v) {
        out += "<cycle:" + std::to_string(i) + ">";
        return false;
      }
    }
    path_.push_back(r.v);
    return true;
  }

  static bool is_cons(const RecordView& r) {
    return r.label == Term::atom(atoms::cons()) && r.args.size() == 2 && arity_info(r.arity).tuple;
  }

  void record(Term t, bool nested, std::string& out) {
    auto r = store_.record(t);
    if (is_cons(r)) {
      list(t, nested, out);
      return;
    }
    if (!enter(t, out)) return;
    const auto& ar = arity_info(r.arity);
    if (r.label == Term::atom(atoms::pair()) && ar.tuple && r.args.size() >= 2) {
      if (nested) out += '(';
      for (std::size_t i = 0; i < r.args.size(); ++i) {
        if (i) out += '#';
        term(r.args[i], true, out);
      }
      if (nested) out += ')';
    } else {
      out += render_literal(r.label);
      out += '(';
      for (std::size_t i = 0; i < r.args.size(); ++i) {
        if (i) out += ' ';
        Term f = ar.features[i];
        if (!(f.is_int() && f.v == static_cast<std::int64_t>(i) + 1)) {
          out += render_literal(f);
          out += ':';
        }
        term(r.args[i], false, out);
      }
      out += ')';
    }
    path_.pop_back();
  }

  void list(Term t, bool nested, std::string& out) {
    std::size_t base = path_.size();
    std::vector<Term> items;
    Term cur = t;
    Term tail;
    bool cyclic = false;
    std::string cycle_mark;
    for (;;) {
      cur = store_.deref(cur, s_);
      if (!cur.is_record()) {
        tail = cur;
        break;
      }
      auto r = store_.record(cur);
      if (!is_cons(r)) {
        tail = cur;
        break;
      }
      bool seen = false;
      for (std::size_t i = 0; i < path_.size(); ++i) {
        if (path_[i] == cur.v) {
          cycle_mark = "<cycle:" + std::to_string(i) + ">";
          seen = true;
          break;
        }
      }
      if (seen) {
        cyclic = true;
        break;
      }
      path_.push_back(cur.v);
      items.push_back(r.args[0]);
      cur = r.args[1];
    }
    if (!cyclic && tail == Term::atom(atoms::nil())) {
      out += '[';
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ' ';
        term(items[i], false, out);
      }
      out += ']';
    } else {
      if (nested) out += '(';
      for (auto x : items) {
        term(x, true, out);
        out += '|';
      }
      if (cyclic) out += cycle_mark;
      else term(tail, true, out);
      if (nested) out += ')';
    }
    path_.resize(base);
  }

  const Store& store_;
  SpaceId s_;
  std::function<int(Term)> proc_arity_;
  std::vector<std::int64_t> path_;
};

}  // namespace

std::string VM::render(Term t, SpaceId s) const {
  Renderer r(store_, s, [this](Term p) {
    if (p.tag == Tag::Builtin) return builtins()[static_cast<std::size_t>(p.v)].arity;
    return static_cast<int>(closures_[static_cast<std::size_t>(p.v)].def->ids.size()) - 1;
  });
  std::string out;
  r.term(t, false, out);
  return out;
}

}  // namespace ks
