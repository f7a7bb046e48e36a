#include "kernelspace/desugar.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>

namespace ks {

namespace {

Ident ident(const std::string& name, Loc loc) {
  Ident i;
  i.name = name;
  i.loc = loc;
  return i;
}

bool is_fd_rel(const std::string& op) {
  return op == ":::" || op == "=:" || op == "\\=:" || op == "<:" || op == "=<:" || op == ">:" || op == ">=:";
}

bool is_constructor(const Node& n) {
  return n.kind == NK::Rec || n.kind == NK::Hash || (n.kind == NK::Op && n.text == "|");
}

struct Shape {
  Term label;
  std::vector<Term> feats;
  std::vector<const Node*> vals;
  ArityId arity = -1;
};

Shape shape_of(const Node& n) {
  Shape sh;
  std::vector<std::pair<Term, const Node*>> pairs;
  if (n.kind == NK::Rec) {
    sh.label = atom_term(n.text);
    std::int64_t pos = 1;
    for (std::size_t i = 0; i < n.items.size(); ++i) {
      Term f;
      if (!n.feats[i]) f = Term::integer(pos++);
      else if (n.feats[i]->kind == NK::Int) f = Term::integer(n.feats[i]->num);
      else f = atom_term(n.feats[i]->text);
      pairs.emplace_back(f, n.items[i].get());
    }
  } else if (n.kind == NK::Hash) {
    sh.label = Term::atom(atoms::pair());
    for (std::size_t i = 0; i < n.items.size(); ++i)
      pairs.emplace_back(Term::integer(static_cast<std::int64_t>(i + 1)), n.items[i].get());
  } else {
    sh.label = Term::atom(atoms::cons());
    pairs.emplace_back(Term::integer(1), n.a.get());
    pairs.emplace_back(Term::integer(2), n.b.get());
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) { return feature_less(x.first, y.first); });
  for (std::size_t i = 0; i + 1 < pairs.size(); ++i)
    if (pairs[i].first == pairs[i + 1].first) throw CompileError("duplicate feature in record", n.loc);
  for (auto& [f, v] : pairs) {
    sh.feats.push_back(f);
    sh.vals.push_back(v);
  }
  sh.arity = intern_arity(sh.feats);
  return sh;
}

void add_name(std::vector<std::string>& out, const std::string& name) {
  if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
}

void pattern_vars(const Node& n, std::vector<std::string>& out) {
  if (n.kind == NK::Var) {
    add_name(out, n.text);
  } else if (n.kind == NK::Rec || n.kind == NK::Hash) {
    for (const auto& i : n.items) pattern_vars(*i, out);
  } else if (n.kind == NK::Op && n.text == "|") {
    pattern_vars(*n.a, out);
    pattern_vars(*n.b, out);
  }
}

void declared_names(const Node& n, std::vector<std::string>& out) {
  if (n.kind == NK::Var) {
    add_name(out, n.text);
  } else if (n.kind == NK::Op && n.text == "=") {
    pattern_vars(*n.a, out);
  } else if ((n.kind == NK::Proc || n.kind == NK::Fun) && n.a->kind == NK::Var) {
    add_name(out, n.a->text);
  }
}

bool bare(const Node& n) { return n.kind == NK::Var || n.kind == NK::Wild; }

int count_tests(const Node& n) {
  if (n.kind == NK::Var || n.kind == NK::Wild) return 0;
  if (is_constructor(n)) {
    int t = 1;
    for (const auto* v : shape_of(n).vals) t += count_tests(*v);
    return t;
  }
  return 1;
}

void scan_temps(const Node& n, int& max) {
  if (n.kind == NK::Var && n.text.size() > 1 && n.text[0] == '_' &&
      std::all_of(n.text.begin() + 1, n.text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    max = std::max(max, std::stoi(n.text.substr(1)));
  }
  for (const auto* v : {&n.a, &n.b, &n.c})
    if (*v) scan_temps(**v, max);
  for (const auto& i : n.items)
    if (i) scan_temps(*i, max);
  for (const auto& i : n.decls) scan_temps(*i, max);
  for (const auto& c : n.clauses) {
    if (c.pattern) scan_temps(*c.pattern, max);
    if (c.body) scan_temps(*c.body, max);
  }
}

class Desugarer {
 public:
  explicit Desugarer(int start) : counter_(start) {}

  StmtPtr program(const std::vector<NodePtr>& blocks, std::vector<std::string>* declared) {
    Out out;
    for (const auto& blk : blocks) {
      std::vector<std::string> names;
      for (const auto& d : blk->decls) declared_names(*d, names);
      if (declared) declared->insert(declared->end(), names.begin(), names.end());
      for (const auto& d : blk->decls)
        if (!bare(*d)) out.push_back(stmt(*d));
      for (const auto& i : blk->items) out.push_back(stmt(*i));
    }
    return seq(std::move(out));
  }

 private:
  using Out = std::vector<StmtPtr>;
  using Temps = std::vector<Ident>;

  Ident fresh(Loc loc) { return ident("_" + std::to_string(counter_++), loc); }

  static StmtPtr wrap(Temps temps, Out out) {
    auto body = seq(std::move(out));
    if (temps.empty()) return body;
    auto l = make_stmt(K::Local, temps[0].loc);
    l->ids = std::move(temps);
    l->body.push_back(std::move(body));
    return l;
  }

  static StmtPtr local_of(const std::vector<std::string>& names, StmtPtr body, Loc loc) {
    if (names.empty()) return body;
    auto l = make_stmt(K::Local, loc);
    for (const auto& n : names) l->ids.push_back(ident(n, loc));
    l->body.push_back(std::move(body));
    return l;
  }

  static StmtPtr eq(const Ident& x, const Ident& y, Loc loc) {
    auto s = make_stmt(K::Eq, loc);
    s->ids = {x, y};
    return s;
  }

  static StmtPtr lit(const Ident& x, Term v, Loc loc) {
    auto s = make_stmt(K::Lit, loc);
    s->ids = {x};
    s->lit = v;
    return s;
  }

  static StmtPtr apply(const std::string& callee, std::vector<Ident> args, Loc loc) {
    auto s = make_stmt(K::Apply, loc);
    s->ids.push_back(ident(callee, loc));
    for (auto& a : args) s->ids.push_back(std::move(a));
    return s;
  }

  Ident lit_temp(Term v, Loc loc, Out& out, Temps& temps) {
    auto t = fresh(loc);
    temps.push_back(t);
    out.push_back(lit(t, v, loc));
    return t;
  }

  Ident list_temp(const std::vector<Ident>& items, Loc loc, Out& out, Temps& temps) {
    Ident tail = lit_temp(Term::atom(atoms::nil()), loc, out, temps);
    for (auto it = items.rbegin(); it != items.rend(); ++it) {
      auto cell = fresh(loc);
      temps.push_back(cell);
      auto r = make_stmt(K::Rec, loc);
      r->ids = {cell, *it, tail};
      r->lit = Term::atom(atoms::cons());
      r->arity = tuple_arity(2);
      out.push_back(std::move(r));
      tail = cell;
    }
    return tail;
  }

  StmtPtr body(const Node& b, const Ident* target) {
    std::vector<std::string> names;
    for (const auto& d : b.decls) declared_names(*d, names);
    Out out;
    for (const auto& d : b.decls)
      if (!bare(*d)) out.push_back(stmt(*d));
    std::size_t n = b.items.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (target && i + 1 == n) {
        Out o;
        Temps temps;
        into(*b.items[i], *target, o, temps);
        out.push_back(wrap(std::move(temps), std::move(o)));
      } else {
        out.push_back(stmt(*b.items[i]));
      }
    }
    return local_of(names, seq(std::move(out)), b.loc);
  }

  StmtPtr stmt(const Node& n) {
    Out out;
    Temps temps;
    switch (n.kind) {
      case NK::Skip:
      case NK::Var:
      case NK::Wild:
        return make_stmt(K::Skip, n.loc);
      case NK::Op:
        if (n.text == "=") {
          if (n.a->kind == NK::Var) {
            into(*n.b, ident(n.a->text, n.a->loc), out, temps);
          } else if (n.b->kind == NK::Var) {
            into(*n.a, ident(n.b->text, n.b->loc), out, temps);
          } else {
            auto t = atom(*n.a, out, temps);
            into(*n.b, t, out, temps);
          }
          return wrap(std::move(temps), std::move(out));
        }
        if (is_fd_rel(n.text)) return fd_stmt(n);
        break;
      case NK::Apply:
        apply_into(n, nullptr, out, temps);
        return wrap(std::move(temps), std::move(out));
      case NK::Body:
        return body(n, nullptr);
      case NK::Local:
        return body(*n.a, nullptr);
      case NK::If: {
        auto c = atom(*n.a, out, temps);
        auto s = make_stmt(K::If, n.loc);
        s->ids = {c};
        s->body.push_back(body(*n.b, nullptr));
        s->body.push_back(n.c ? body(*n.c, nullptr) : make_stmt(K::Skip, n.loc));
        out.push_back(std::move(s));
        return wrap(std::move(temps), std::move(out));
      }
      case NK::Case: {
        auto subj = atom(*n.a, out, temps);
        std::vector<std::pair<const Node*, const Node*>> cls;
        for (const auto& c : n.clauses) cls.emplace_back(c.pattern.get(), c.body.get());
        out.push_back(case_chain(subj, cls, 0, n.c.get(), nullptr, n.loc));
        return wrap(std::move(temps), std::move(out));
      }
      case NK::Proc:
      case NK::Fun:
        if (n.a->kind != NK::Var) throw CompileError("anonymous procedure used as a statement", n.loc);
        return proc_def(n, ident(n.a->text, n.a->loc));
      case NK::Thread: {
        auto s = make_stmt(K::Thread, n.loc);
        s->body.push_back(body(*n.a, nullptr));
        return s;
      }
      case NK::Try: {
        auto s = make_stmt(K::Try, n.loc);
        s->ids = {ident(n.b->text, n.b->loc)};
        s->body.push_back(body(*n.a, nullptr));
        s->body.push_back(body(*n.c, nullptr));
        return s;
      }
      case NK::Raise: {
        const Node* e = n.a.get();
        if (e->kind == NK::Body && e->decls.empty() && e->items.size() == 1) e = e->items[0].get();
        if (e->kind == NK::Var) {
          auto s = make_stmt(K::Raise, n.loc);
          s->ids = {ident(e->text, e->loc)};
          return s;
        }
        auto t = fresh(n.loc);
        temps.push_back(t);
        out.push_back(body(*n.a, &t));
        auto s = make_stmt(K::Raise, n.loc);
        s->ids = {t};
        out.push_back(std::move(s));
        return wrap(std::move(temps), std::move(out));
      }
      case NK::Choice:
        return choice(n, nullptr);
      case NK::Dis:
        return dis(n);
      default:
        break;
    }
    throw CompileError("expression used as a statement", n.loc);
  }

  Ident atom(const Node& n, Out& out, Temps& temps) {
    if (n.kind == NK::Var) return ident(n.text, n.loc);
    auto t = fresh(n.loc);
    temps.push_back(t);
    into(n, t, out, temps);
    return t;
  }

  static const char* arith_builtin(const std::string& op, bool& swap) {
    swap = false;
    if (op == "+") return "IntPlus";
    if (op == "-") return "IntMinus";
    if (op == "*") return "IntTimes";
    if (op == "<") return "Less";
    if (op == "=<") return "Leq";
    if (op == "==") return "Equal";
    if (op == "\\=") return "NotEqual";
    swap = true;
    if (op == ">") return "Less";
    if (op == ">=") return "Leq";
    return nullptr;
  }

  void into(const Node& n, const Ident& t, Out& out, Temps& temps) {
    switch (n.kind) {
      case NK::Var:
        out.push_back(eq(t, ident(n.text, n.loc), n.loc));
        return;
      case NK::Wild:
        return;
      case NK::Int:
        out.push_back(lit(t, Term::integer(n.num), n.loc));
        return;
      case NK::Atom:
        out.push_back(lit(t, atom_term(n.text), n.loc));
        return;
      case NK::Neg:
        if (n.a->kind == NK::Int) {
          out.push_back(lit(t, Term::integer(-n.a->num), n.loc));
        } else {
          auto z = lit_temp(Term::integer(0), n.loc, out, temps);
          auto a = atom(*n.a, out, temps);
          out.push_back(apply("IntMinus", {z, a, t}, n.loc));
        }
        return;
      case NK::Rec:
      case NK::Hash:
        construct(n, t, out, temps);
        return;
      case NK::Op: {
        if (n.text == "|") {
          construct(n, t, out, temps);
          return;
        }
        if (n.text == "=") {
          out.push_back(stmt(n));
          into(*n.a, t, out, temps);
          return;
        }
        bool swap = false;
        const char* b = arith_builtin(n.text, swap);
        if (!b) break;
        auto x = atom(*n.a, out, temps);
        auto y = atom(*n.b, out, temps);
        out.push_back(swap ? apply(b, {y, x, t}, n.loc) : apply(b, {x, y, t}, n.loc));
        return;
      }
      case NK::Dot: {
        auto r = atom(*n.a, out, temps);
        Ident f = n.b->kind == NK::Var ? ident(n.b->text, n.b->loc)
                                       : lit_temp(n.b->kind == NK::Int ? Term::integer(n.b->num) : atom_term(n.b->text),
                                                  n.b->loc, out, temps);
        out.push_back(apply("Dot", {r, f, t}, n.loc));
        return;
      }
      case NK::Apply:
        apply_into(n, &t, out, temps);
        return;
      case NK::Body:
        out.push_back(body(n, &t));
        return;
      case NK::Local:
        out.push_back(body(*n.a, &t));
        return;
      case NK::If: {
        if (!n.c) throw CompileError("'if' used as an expression needs an 'else'", n.loc);
        auto c = atom(*n.a, out, temps);
        auto s = make_stmt(K::If, n.loc);
        s->ids = {c};
        s->body.push_back(body(*n.b, &t));
        s->body.push_back(body(*n.c, &t));
        out.push_back(std::move(s));
        return;
      }
      case NK::Case: {
        auto subj = atom(*n.a, out, temps);
        std::vector<std::pair<const Node*, const Node*>> cls;
        for (const auto& c : n.clauses) cls.emplace_back(c.pattern.get(), c.body.get());
        out.push_back(case_chain(subj, cls, 0, n.c.get(), &t, n.loc));
        return;
      }
      case NK::Proc:
      case NK::Fun:
        if (n.a->kind == NK::Dollar) {
          out.push_back(proc_def(n, t));
        } else {
          out.push_back(stmt(n));
          out.push_back(eq(t, ident(n.a->text, n.a->loc), n.loc));
        }
        return;
      case NK::Thread: {
        auto s = make_stmt(K::Thread, n.loc);
        s->body.push_back(body(*n.a, &t));
        out.push_back(std::move(s));
        return;
      }
      case NK::Try: {
        auto s = make_stmt(K::Try, n.loc);
        s->ids = {ident(n.b->text, n.b->loc)};
        s->body.push_back(body(*n.a, &t));
        s->body.push_back(body(*n.c, &t));
        out.push_back(std::move(s));
        return;
      }
      case NK::Raise:
        out.push_back(stmt(n));
        return;
      case NK::Choice:
        out.push_back(choice(n, &t));
        return;
      default:
        break;
    }
    throw CompileError("this construct cannot be used as an expression", n.loc);
  }

  void construct(const Node& n, const Ident& t, Out& out, Temps& temps) {
    auto sh = shape_of(n);
    if (sh.vals.empty()) {
      out.push_back(lit(t, sh.label, n.loc));
      return;
    }
    auto r = make_stmt(K::Rec, n.loc);
    r->ids.push_back(t);
    r->lit = sh.label;
    r->arity = sh.arity;
    std::vector<std::pair<Ident, const Node*>> pending;
    for (const auto* v : sh.vals) {
      if (v->kind == NK::Var) {
        r->ids.push_back(ident(v->text, v->loc));
      } else {
        auto x = fresh(v->loc);
        temps.push_back(x);
        r->ids.push_back(x);
        if (v->kind != NK::Wild) pending.emplace_back(x, v);
      }
    }
    out.push_back(std::move(r));
    for (auto& [x, v] : pending) into(*v, x, out, temps);
  }

  void apply_into(const Node& n, const Ident* target, Out& out, Temps& temps) {
    std::vector<Ident> ids;
    ids.push_back(atom(*n.items[0], out, temps));
    bool used = false;
    for (std::size_t i = 1; i < n.items.size(); ++i) {
      const auto& a = *n.items[i];
      if (a.kind == NK::Dollar) {
        if (!target) throw CompileError("'$' used outside an expression", a.loc);
        if (used) throw CompileError("more than one '$' in a call", a.loc);
        ids.push_back(*target);
        used = true;
      } else {
        ids.push_back(atom(a, out, temps));
      }
    }
    if (target && !used) ids.push_back(*target);
    auto s = make_stmt(K::Apply, n.loc);
    s->ids = std::move(ids);
    out.push_back(std::move(s));
  }

  StmtPtr proc_def(const Node& n, const Ident& name) {
    auto s = make_stmt(K::Proc, n.loc);
    s->ids.push_back(name);
    for (const auto& p : n.items) s->ids.push_back(p->kind == NK::Var ? ident(p->text, p->loc) : fresh(p->loc));
    if (n.kind == NK::Proc) {
      s->body.push_back(body(*n.b, nullptr));
      return s;
    }
    auto r = fresh(n.loc);
    s->ids.push_back(r);
    if (!n.lazy) {
      s->body.push_back(body(*n.b, &r));
      return s;
    }
    auto p = fresh(n.loc), x = fresh(n.loc), y = fresh(n.loc);
    auto inner = make_stmt(K::Proc, n.loc);
    inner->ids = {p, y};
    inner->body.push_back(body(*n.b, &y));
    Out out;
    out.push_back(std::move(inner));
    out.push_back(apply("ByNeed", {p, x}, n.loc));
    out.push_back(eq(r, x, n.loc));
    s->body.push_back(wrap({p, x}, std::move(out)));
    return s;
  }

  StmtPtr raise_nomatch(Loc loc) {
    auto e = fresh(loc), k = fresh(loc);
    Out out;
    auto r = make_stmt(K::Rec, loc);
    r->ids = {e, k};
    r->lit = Term::atom(atoms::error());
    r->arity = intern_arity({atom_term("kind")});
    out.push_back(std::move(r));
    out.push_back(lit(k, atom_term("nomatch"), loc));
    auto s = make_stmt(K::Raise, loc);
    s->ids = {e};
    out.push_back(std::move(s));
    return wrap({e, k}, std::move(out));
  }

  StmtPtr case_chain(const Ident& subj, const std::vector<std::pair<const Node*, const Node*>>& cls, std::size_t i,
                     const Node* else_body, const Ident* target, Loc loc) {
    if (i == cls.size()) return else_body ? body(*else_body, target) : raise_nomatch(loc);
    const Node& pat = *cls[i].first;
    auto succ = body(*cls[i].second, target);
    if (count_tests(pat) <= 1) {
      auto rest = case_chain(subj, cls, i + 1, else_body, target, loc);
      return match(subj, pat, std::move(succ), [&] { return std::move(rest); });
    }
    auto e = fresh(pat.loc);
    auto def = make_stmt(K::Proc, pat.loc);
    def->ids = {e};
    def->body.push_back(case_chain(subj, cls, i + 1, else_body, target, loc));
    Out out;
    out.push_back(std::move(def));
    out.push_back(match(subj, pat, std::move(succ), [&] { return apply(e.name, {}, pat.loc); }));
    return wrap({e}, std::move(out));
  }

  StmtPtr match(const Ident& x, const Node& pat, StmtPtr succ, const std::function<StmtPtr()>& fail) {
    switch (pat.kind) {
      case NK::Var: {
        Out out;
        auto v = ident(pat.text, pat.loc);
        out.push_back(eq(v, x, pat.loc));
        out.push_back(std::move(succ));
        return wrap({v}, std::move(out));
      }
      case NK::Wild:
        return succ;
      case NK::Int:
      case NK::Atom:
      case NK::Neg: {
        Term v;
        if (pat.kind == NK::Int) v = Term::integer(pat.num);
        else if (pat.kind == NK::Atom) v = atom_term(pat.text);
        else if (pat.a->kind == NK::Int) v = Term::integer(-pat.a->num);
        else throw CompileError("invalid pattern", pat.loc);
        auto s = make_stmt(K::Case, pat.loc);
        s->ids = {x};
        s->lit = v;
        s->arity = -1;
        s->body.push_back(std::move(succ));
        s->body.push_back(fail());
        return s;
      }
      default:
        break;
    }
    if (!is_constructor(pat)) throw CompileError("invalid pattern", pat.loc);
    auto sh = shape_of(pat);
    if (sh.vals.empty()) {
      auto s = make_stmt(K::Case, pat.loc);
      s->ids = {x};
      s->lit = sh.label;
      s->arity = -1;
      s->body.push_back(std::move(succ));
      s->body.push_back(fail());
      return s;
    }
    std::vector<Ident> vars;
    for (const auto* v : sh.vals) vars.push_back(v->kind == NK::Var ? ident(v->text, v->loc) : fresh(v->loc));
    StmtPtr inner = std::move(succ);
    for (std::size_t j = sh.vals.size(); j-- > 0;) {
      const auto* v = sh.vals[j];
      if (v->kind == NK::Var || v->kind == NK::Wild) continue;
      inner = match(vars[j], *v, std::move(inner), fail);
    }
    auto s = make_stmt(K::Case, pat.loc);
    s->ids.push_back(x);
    for (auto& v : vars) s->ids.push_back(v);
    s->lit = sh.label;
    s->arity = sh.arity;
    s->body.push_back(std::move(inner));
    s->body.push_back(fail());
    return s;
  }

  StmtPtr choice(const Node& n, const Ident* target) {
    Out out;
    Temps temps;
    auto c = fresh(n.loc);
    temps.push_back(c);
    auto k = lit_temp(Term::integer(static_cast<std::int64_t>(n.clauses.size())), n.loc, out, temps);
    out.push_back(apply("Choose", {k, c}, n.loc));
    std::vector<NodePtr> pats;
    std::vector<std::pair<const Node*, const Node*>> cls;
    for (std::size_t i = 0; i < n.clauses.size(); ++i) {
      auto p = std::make_unique<Node>();
      p->kind = NK::Int;
      p->num = static_cast<std::int64_t>(i + 1);
      p->loc = n.clauses[i].body->loc;
      cls.emplace_back(p.get(), n.clauses[i].body.get());
      pats.push_back(std::move(p));
    }
    out.push_back(case_chain(c, cls, 0, nullptr, target, n.loc));
    return wrap(std::move(temps), std::move(out));
  }

  StmtPtr dis(const Node& n) {
    Out out;
    Temps temps;
    std::vector<Ident> guards, bodies;
    for (const auto& cl : n.clauses) {
      auto g = fresh(cl.pattern->loc), b = fresh(cl.body->loc);
      temps.push_back(g);
      temps.push_back(b);
      guards.push_back(g);
      bodies.push_back(b);
      const Node& gb = *cl.pattern;
      std::vector<std::string> names;
      for (const auto& d : gb.decls) declared_names(*d, names);
      Out gs;
      for (const auto& d : gb.decls)
        if (!bare(*d)) gs.push_back(stmt(*d));
      for (const auto& i : gb.items) gs.push_back(stmt(*i));
      auto gp = make_stmt(K::Proc, gb.loc);
      gp->ids = {g, fresh(gb.loc)};
      gp->body.push_back(seq(std::move(gs)));
      auto bp = make_stmt(K::Proc, cl.body->loc);
      bp->ids = {b};
      bp->body.push_back(body(*cl.body, nullptr));
      Out pair;
      pair.push_back(std::move(gp));
      pair.push_back(std::move(bp));
      out.push_back(local_of(names, seq(std::move(pair)), gb.loc));
    }
    auto gl = list_temp(guards, n.loc, out, temps);
    auto bl = list_temp(bodies, n.loc, out, temps);
    out.push_back(apply("Dis", {gl, bl}, n.loc));
    return wrap(std::move(temps), std::move(out));
  }

  struct Mono {
    std::vector<std::string> vars;
    std::int64_t coef = 0;
  };
  struct Poly {
    std::vector<Mono> monos;
    std::int64_t k = 0;
  };

  static void add_mono(Poly& p, Mono m) {
    for (auto& x : p.monos) {
      if (x.vars == m.vars) {
        x.coef += m.coef;
        return;
      }
    }
    p.monos.push_back(std::move(m));
  }

  static Poly scale(Poly p, std::int64_t f) {
    for (auto& m : p.monos) m.coef *= f;
    p.k *= f;
    return p;
  }

  static Poly sum(Poly a, const Poly& b) {
    for (const auto& m : b.monos) add_mono(a, m);
    a.k += b.k;
    return a;
  }

  static Poly product(const Poly& a, const Poly& b) {
    Poly out;
    out.k = a.k * b.k;
    for (const auto& x : a.monos) {
      for (const auto& y : b.monos) {
        Mono m;
        m.vars = x.vars;
        m.vars.insert(m.vars.end(), y.vars.begin(), y.vars.end());
        m.coef = x.coef * y.coef;
        add_mono(out, std::move(m));
      }
      if (b.k) add_mono(out, Mono{x.vars, x.coef * b.k});
    }
    if (a.k)
      for (const auto& y : b.monos) add_mono(out, Mono{y.vars, y.coef * a.k});
    return out;
  }

  Poly poly(const Node& n, Out& out, Temps& temps) {
    switch (n.kind) {
      case NK::Int: {
        Poly p;
        p.k = n.num;
        return p;
      }
      case NK::Var: {
        Poly p;
        p.monos.push_back(Mono{{n.text}, 1});
        return p;
      }
      case NK::Neg:
        return scale(poly(*n.a, out, temps), -1);
      case NK::Op:
        if (n.text == "+") return sum(poly(*n.a, out, temps), poly(*n.b, out, temps));
        if (n.text == "-") return sum(poly(*n.a, out, temps), scale(poly(*n.b, out, temps), -1));
        if (n.text == "*") {
          auto a = poly(*n.a, out, temps);
          return product(a, poly(*n.b, out, temps));
        }
        break;
      default:
        break;
    }
    Poly p;
    p.monos.push_back(Mono{{atom(n, out, temps).name}, 1});
    return p;
  }

  StmtPtr fd_stmt(const Node& n) {
    Out out;
    Temps temps;
    Loc loc = n.loc;
    if (n.text == ":::") {
      auto x = atom(*n.a, out, temps);
      Ident lo, hi;
      if (n.b->kind == NK::Hash && n.b->items.size() == 2) {
        lo = atom(*n.b->items[0], out, temps);
        hi = atom(*n.b->items[1], out, temps);
      } else {
        lo = atom(*n.b, out, temps);
        hi = lo;
      }
      out.push_back(apply("FDTellDom", {x, lo, hi}, loc));
      return wrap(std::move(temps), std::move(out));
    }
    auto p = sum(poly(*n.a, out, temps), scale(poly(*n.b, out, temps), -1));
    std::map<std::pair<std::string, std::string>, std::string> memo;
    std::vector<std::int64_t> coefs;
    std::vector<Ident> vars;
    for (const auto& m : p.monos) {
      if (m.coef == 0) continue;
      std::string acc = m.vars.back();
      for (std::size_t j = m.vars.size() - 1; j-- > 0;) {
        auto key = std::make_pair(m.vars[j], acc);
        auto it = memo.find(key);
        if (it == memo.end()) {
          auto aux = fresh(loc);
          temps.push_back(aux);
          out.push_back(apply("FDMult", {ident(m.vars[j], loc), ident(acc, loc), aux}, loc));
          it = memo.emplace(key, aux.name).first;
        }
        acc = it->second;
      }
      coefs.push_back(m.coef);
      vars.push_back(ident(acc, loc));
    }
    std::int64_t c = -p.k;
    std::string rel = "=<";
    if (n.text == "=:") {
      rel = "=";
    } else if (n.text == "\\=:") {
      rel = "\\=";
    } else if (n.text == "<:") {
      c -= 1;
    } else if (n.text == ">=:" || n.text == ">:") {
      for (auto& k : coefs) k = -k;
      c = -c;
      if (n.text == ">:") c -= 1;
    }
    std::vector<Ident> cs;
    for (auto k : coefs) cs.push_back(lit_temp(Term::integer(k), loc, out, temps));
    auto cl = list_temp(cs, loc, out, temps);
    auto vl = list_temp(vars, loc, out, temps);
    auto rl = lit_temp(atom_term(rel), loc, out, temps);
    auto kl = lit_temp(Term::integer(c), loc, out, temps);
    out.push_back(apply("FDLinear", {cl, vl, rl, kl}, loc));
    return wrap(std::move(temps), std::move(out));
  }

  int counter_;
};

class Resolver {
 public:
  explicit Resolver(const GlobalScope& g) : globals_(g) {}

  struct Ctx {
    std::vector<std::unordered_map<std::string, int>> scopes;
    int next = 0;
    std::unordered_map<std::string, int> cap_index;
    std::vector<Ident>* captures = nullptr;
    Ctx* parent = nullptr;
  };

  int top(Stmt& s) {
    Ctx c;
    c.scopes.emplace_back();
    walk(s, c);
    return c.next;
  }

 private:
  std::optional<std::pair<RefKind, int>> lookup(const std::string& name, Ctx& c) {
    for (auto it = c.scopes.rbegin(); it != c.scopes.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return std::make_pair(RefKind::Slot, f->second);
    }
    if (auto f = c.cap_index.find(name); f != c.cap_index.end()) return std::make_pair(RefKind::Captured, f->second);
    if (c.parent) {
      auto r = lookup(name, *c.parent);
      if (r) {
        if (r->first == RefKind::Global) return r;
        Ident cap;
        cap.name = name;
        cap.kind = r->first;
        cap.index = r->second;
        int idx = static_cast<int>(c.captures->size());
        c.captures->push_back(cap);
        c.cap_index[name] = idx;
        return std::make_pair(RefKind::Captured, idx);
      }
      return std::nullopt;
    }
    if (auto f = globals_.index.find(name); f != globals_.index.end()) return std::make_pair(RefKind::Global, f->second);
    return std::nullopt;
  }

  void use(Ident& id, Ctx& c) {
    auto r = lookup(id.name, c);
    if (!r) throw CompileError("unbound identifier " + var_name(id.name), id.loc);
    id.kind = r->first;
    id.index = r->second;
  }

  static void bind(Ident& id, Ctx& c) {
    id.kind = RefKind::Slot;
    id.index = c.next++;
    c.scopes.back()[id.name] = id.index;
  }

  void scoped(Stmt& s, std::size_t from, Stmt& body, Ctx& c) {
    c.scopes.emplace_back();
    for (std::size_t i = from; i < s.ids.size(); ++i) bind(s.ids[i], c);
    walk(body, c);
    c.scopes.pop_back();
  }

  void walk(Stmt& s, Ctx& c) {
    switch (s.kind) {
      case K::Skip:
        break;
      case K::Eq:
      case K::Lit:
      case K::Rec:
      case K::Apply:
      case K::Raise:
        for (auto& i : s.ids) use(i, c);
        break;
      case K::Seq:
      case K::Thread:
        for (auto& k : s.body) walk(*k, c);
        break;
      case K::Local:
        scoped(s, 0, *s.body[0], c);
        break;
      case K::If:
        use(s.ids[0], c);
        walk(*s.body[0], c);
        walk(*s.body[1], c);
        break;
      case K::Case:
        use(s.ids[0], c);
        scoped(s, 1, *s.body[0], c);
        walk(*s.body[1], c);
        break;
      case K::Proc: {
        use(s.ids[0], c);
        s.captures.clear();
        Ctx inner;
        inner.scopes.emplace_back();
        inner.captures = &s.captures;
        inner.parent = &c;
        for (std::size_t i = 1; i < s.ids.size(); ++i) bind(s.ids[i], inner);
        walk(*s.body[0], inner);
        s.frame_size = inner.next;
        break;
      }
      case K::Try:
        walk(*s.body[0], c);
        scoped(s, 0, *s.body[1], c);
        break;
    }
  }

  const GlobalScope& globals_;
};

}  // namespace

StmtPtr desugar(const std::vector<NodePtr>& program, std::vector<std::string>* declared) {
  int max = 0;
  for (const auto& b : program) scan_temps(*b, max);
  Desugarer d(max + 1);
  return d.program(program, declared);
}

int resolve(Stmt& s, const GlobalScope& globals) { return Resolver(globals).top(s); }

Program compile(std::string_view source, GlobalScope& globals) {
  auto tree = parse(source);
  std::vector<std::string> declared;
  Program p;
  p.body = desugar(tree, &declared);
  GlobalScope trial = globals;
  std::vector<int> fresh;
  for (const auto& name : declared) fresh.push_back(trial.declare(name));
  p.frame_size = resolve(*p.body, trial);
  globals = std::move(trial);
  p.new_globals = std::move(fresh);
  return p;
}

}  // namespace ks
