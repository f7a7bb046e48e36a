#include "kernelspace/kernel.hpp"

#include <algorithm>
#include <cctype>

namespace ks {

StmtPtr make_stmt(K kind, Loc loc) {
  auto s = std::make_unique<Stmt>();
  s->kind = kind;
  s->loc = loc;
  return s;
}

StmtPtr seq(std::vector<StmtPtr> items) {
  std::vector<StmtPtr> flat;
  for (auto& it : items) {
    if (!it) continue;
    if (it->kind == K::Seq) {
      for (auto& k : it->body) flat.push_back(std::move(k));
    } else {
      flat.push_back(std::move(it));
    }
  }
  if (flat.empty()) return make_stmt(K::Skip);
  if (flat.size() == 1) return std::move(flat[0]);
  auto s = make_stmt(K::Seq, flat[0]->loc);
  s->body = std::move(flat);
  return s;
}

namespace {

const char* const kKeywords[] = {
    "andthen", "at",     "attr",  "case",  "catch",   "choice", "class",   "cond",  "declare",
    "define",  "dis",    "div",   "do",    "else",    "elsecase", "elseif", "elseof", "end",
    "fail",    "feat",   "finally", "from", "fun",    "functor", "if",     "import", "in",
    "lazy",    "local",  "lock",  "meth",  "mod",     "not",    "of",      "or",    "orelse",
    "prepare", "proc",   "prop",  "raise", "require", "self",   "skip",    "then",  "thread",
    "try"};

bool is_keyword(const std::string& s) {
  return std::find(std::begin(kKeywords), std::end(kKeywords), s) != std::end(kKeywords);
}

bool plain_word(const std::string& s, bool upper) {
  if (s.empty()) return false;
  unsigned char c0 = static_cast<unsigned char>(s[0]);
  if (upper ? !std::isupper(c0) : !std::islower(c0)) return false;
  for (unsigned char c : s)
    if (!std::isalnum(c) && c != '_') return false;
  return true;
}

std::string escaped(const std::string& s, char q) {
  std::string out(1, q);
  for (char c : s) {
    if (c == q || c == '\\') out += '\\';
    out += c;
  }
  out += q;
  return out;
}

std::string feature_text(Term f) {
  return f.is_int() ? render_literal(f) : quote_atom(atom_name(f.v));
}

std::string label_text(Term label, ArityId arity, const std::vector<Ident>& ids, std::size_t first) {
  std::string out = quote_atom(atom_name(label.v)) + "(";
  const auto& fs = arity_info(arity).features;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (i) out += ' ';
    out += feature_text(fs[i]) + ":" + var_name(ids[first + i].name);
  }
  return out + ")";
}

void indent(std::string& out, int n) { out.append(static_cast<std::size_t>(n) * 3, ' '); }

void pp(const Stmt& s, int ind, std::string& out) {
  auto line = [&](const std::string& text) {
    indent(out, ind);
    out += text;
    out += '\n';
  };
  auto id = [&](std::size_t i) { return var_name(s.ids[i].name); };
  switch (s.kind) {
    case K::Skip:
      line("skip");
      break;
    case K::Eq:
      line(id(0) + " = " + id(1));
      break;
    case K::Lit:
      line(id(0) + " = " + render_literal(s.lit));
      break;
    case K::Rec:
      line(id(0) + " = " + label_text(s.lit, s.arity, s.ids, 1));
      break;
    case K::Seq:
      for (const auto& k : s.body) pp(*k, ind, out);
      break;
    case K::Local: {
      std::string head = "local";
      for (const auto& i : s.ids) head += " " + var_name(i.name);
      line(head + " in");
      pp(*s.body[0], ind + 1, out);
      line("end");
      break;
    }
    case K::If:
      line("if " + id(0) + " then");
      pp(*s.body[0], ind + 1, out);
      line("else");
      pp(*s.body[1], ind + 1, out);
      line("end");
      break;
    case K::Case: {
      std::string pat = s.arity < 0 ? render_literal(s.lit) : label_text(s.lit, s.arity, s.ids, 1);
      line("case " + id(0) + " of " + pat + " then");
      pp(*s.body[0], ind + 1, out);
      line("else");
      pp(*s.body[1], ind + 1, out);
      line("end");
      break;
    }
    case K::Proc: {
      std::string head = "proc {" + id(0);
      for (std::size_t i = 1; i < s.ids.size(); ++i) head += " " + id(i);
      line(head + "}");
      pp(*s.body[0], ind + 1, out);
      line("end");
      break;
    }
    case K::Apply: {
      std::string call = "{" + id(0);
      for (std::size_t i = 1; i < s.ids.size(); ++i) call += " " + id(i);
      line(call + "}");
      break;
    }
    case K::Thread:
      line("thread");
      pp(*s.body[0], ind + 1, out);
      line("end");
      break;
    case K::Try:
      line("try");
      pp(*s.body[0], ind + 1, out);
      line("catch " + id(0) + " then");
      pp(*s.body[1], ind + 1, out);
      line("end");
      break;
    case K::Raise:
      line("raise " + id(0) + " end");
      break;
  }
}

void flatten(const Stmt& s, std::vector<const Stmt*>& out) {
  if (s.kind == K::Seq) {
    for (const auto& k : s.body) flatten(*k, out);
  } else {
    out.push_back(&s);
  }
}

class Alpha {
 public:
  bool same(const Stmt& a, const Stmt& b) {
    std::vector<const Stmt*> xs, ys;
    flatten(a, xs);
    flatten(b, ys);
    if (xs.size() != ys.size()) return false;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (!one(*xs[i], *ys[i])) return false;
    return true;
  }

 private:
  bool use(const Ident& a, const Ident& b) const {
    for (std::size_t i = binds_.size(); i-- > 0;) {
      bool ma = binds_[i].first == a.name, mb = binds_[i].second == b.name;
      if (ma || mb) return ma && mb;
    }
    return a.name == b.name;
  }

  bool uses(const Stmt& a, const Stmt& b, std::size_t from, std::size_t to) const {
    for (std::size_t i = from; i < to; ++i)
      if (!use(a.ids[i], b.ids[i])) return false;
    return true;
  }

  bool scoped(const Stmt& a, const Stmt& b, std::size_t from, const Stmt& x, const Stmt& y) {
    auto mark = binds_.size();
    for (std::size_t i = from; i < a.ids.size(); ++i) binds_.emplace_back(a.ids[i].name, b.ids[i].name);
    bool ok = same(x, y);
    binds_.resize(mark);
    return ok;
  }

  bool one(const Stmt& a, const Stmt& b) {
    if (a.kind != b.kind || a.ids.size() != b.ids.size() || a.body.size() != b.body.size()) return false;
    switch (a.kind) {
      case K::Skip:
        return true;
      case K::Eq:
      case K::Apply:
      case K::Raise:
        return uses(a, b, 0, a.ids.size());
      case K::Lit:
        return a.lit == b.lit && uses(a, b, 0, 1);
      case K::Rec:
        return a.lit == b.lit && a.arity == b.arity && uses(a, b, 0, a.ids.size());
      case K::Seq:
        return same(a, b);
      case K::Local:
        return scoped(a, b, 0, *a.body[0], *b.body[0]);
      case K::If:
        return uses(a, b, 0, 1) && same(*a.body[0], *b.body[0]) && same(*a.body[1], *b.body[1]);
      case K::Case:
        return a.lit == b.lit && a.arity == b.arity && uses(a, b, 0, 1) &&
               scoped(a, b, 1, *a.body[0], *b.body[0]) && same(*a.body[1], *b.body[1]);
      case K::Proc:
        return uses(a, b, 0, 1) && scoped(a, b, 1, *a.body[0], *b.body[0]);
      case K::Thread:
        return same(*a.body[0], *b.body[0]);
      case K::Try:
        return same(*a.body[0], *b.body[0]) && scoped(a, b, 0, *a.body[1], *b.body[1]);
    }
    return false;
  }

  std::vector<std::pair<std::string, std::string>> binds_;
};

void collect_free(const Stmt& s, std::vector<std::string>& bound, std::set<std::string>& out) {
  auto use = [&](const Ident& i) {
    if (std::find(bound.begin(), bound.end(), i.name) == bound.end()) out.insert(i.name);
  };
  auto scoped = [&](std::size_t from, const Stmt& body) {
    auto mark = bound.size();
    for (std::size_t i = from; i < s.ids.size(); ++i) bound.push_back(s.ids[i].name);
    collect_free(body, bound, out);
    bound.resize(mark);
  };
  switch (s.kind) {
    case K::Skip:
      break;
    case K::Eq:
    case K::Lit:
    case K::Rec:
    case K::Apply:
    case K::Raise:
      for (const auto& i : s.ids) use(i);
      break;
    case K::Seq:
    case K::Thread:
      for (const auto& k : s.body) collect_free(*k, bound, out);
      break;
    case K::Local:
      scoped(0, *s.body[0]);
      break;
    case K::If:
      use(s.ids[0]);
      collect_free(*s.body[0], bound, out);
      collect_free(*s.body[1], bound, out);
      break;
    case K::Case:
      use(s.ids[0]);
      scoped(1, *s.body[0]);
      collect_free(*s.body[1], bound, out);
      break;
    case K::Proc:
      use(s.ids[0]);
      scoped(1, *s.body[0]);
      break;
    case K::Try:
      collect_free(*s.body[0], bound, out);
      scoped(0, *s.body[1]);
      break;
  }
}

}  // namespace

std::string quote_atom(const std::string& name) {
  if (plain_word(name, false) && !is_keyword(name)) return name;
  return escaped(name, '\'');
}

std::string var_name(const std::string& name) {
  if (plain_word(name, true)) return name;
  return escaped(name, '`');
}

std::string render_literal(Term t) {
  if (t.is_int()) return t.v < 0 ? "~" + std::to_string(-t.v) : std::to_string(t.v);
  if (t.is_atom()) return quote_atom(atom_name(t.v));
  return "<literal>";
}

std::string pretty(const Stmt& s) {
  std::string out;
  pp(s, 0, out);
  return out;
}

bool alpha_equivalent(const Stmt& a, const Stmt& b) { return Alpha().same(a, b); }

std::set<std::string> free_identifiers(const Stmt& s) {
  std::vector<std::string> bound;
  std::set<std::string> out;
  collect_free(s, bound, out);
  return out;
}

}  // namespace ks
