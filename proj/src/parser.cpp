#include <algorithm>
#include <cctype>

#include "kernelspace/surface.hpp"

namespace ks {

namespace {

enum class T : std::uint8_t { Int, Atom, Var, Kw, Sym, Eof };

struct Tok {
  T t = T::Eof;
  std::string s;
  std::int64_t n = 0;
  Loc loc;
  bool paren = false;  // immediately followed by '('
};

const char* const kParserKeywords[] = {
    "local", "in",    "end",   "declare", "proc",  "fun",    "lazy",  "if",      "then",
    "else",  "elseif", "case", "of",      "thread", "try",   "catch", "raise",   "choice",
    "dis",   "skip",  "andthen", "orelse", "class", "functor", "for",  "meth",    "finally",
    "div",   "mod",   "cond",  "lock",    "not",   "fail"};

const char* const kSymbols[] = {":::", "=<:", ">=:", "\\=:", "=:", "<:", ">:", "==", "=<", ">=", "\\=",
                                "[]",  "(",   ")",   "{",    "}",  "[",  "]",  "|",  "#",  "=",  "<",
                                ">",   "+",   "-",   "*",    "~",  ".",  ":",  "$",  "_",  ","};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Tok> run() {
    std::vector<Tok> out;
    for (;;) {
      skip_space();
      Tok t;
      t.loc = {line_, col_};
      if (pos_ >= src_.size()) {
        t.t = T::Eof;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        std::string digits;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) digits += next();
        t.t = T::Int;
        t.s = digits;
        try {
          t.n = std::stoll(digits);
        } catch (const std::out_of_range&) {
          throw SyntaxError("integer literal out of range", t.loc);
        }
      } else if (std::isalpha(static_cast<unsigned char>(c)) ||
                 (c == '_' && pos_ + 1 < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_ + 1])))) {
        std::string w;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          w += next();
        if (std::isupper(static_cast<unsigned char>(w[0])) || w[0] == '_') {
          t.t = T::Var;
        } else if (std::find(std::begin(kParserKeywords), std::end(kParserKeywords), w) !=
                   std::end(kParserKeywords)) {
          t.t = T::Kw;
        } else {
          t.t = T::Atom;
        }
        t.s = w;
      } else if (c == '\'' || c == '`') {
        t.t = c == '\'' ? T::Atom : T::Var;
        t.s = quoted(c, t.loc);
      } else {
        bool found = false;
        for (const char* sym : kSymbols) {
          std::string_view sv(sym);
          if (src_.substr(pos_, sv.size()) == sv) {
            for (std::size_t k = 0; k < sv.size(); ++k) next();
            t.t = T::Sym;
            t.s = std::string(sv);
            found = true;
            break;
          }
        }
        if (!found) throw SyntaxError(std::string("unexpected character '") + c + "'", t.loc);
      }
      t.paren = pos_ < src_.size() && src_[pos_] == '(';
      out.push_back(std::move(t));
    }
  }

 private:
  char next() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        next();
      } else if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') next();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
        Loc start{line_, col_};
        next();
        next();
        while (pos_ + 1 < src_.size() && !(src_[pos_] == '*' && src_[pos_ + 1] == '/')) next();
        if (pos_ + 1 >= src_.size()) throw SyntaxError("unterminated comment", start);
        next();
        next();
      } else {
        return;
      }
    }
  }

  std::string quoted(char q, Loc loc) {
    next();
    std::string out;
    while (pos_ < src_.size() && src_[pos_] != q) {
      char c = next();
      if (c == '\\' && pos_ < src_.size()) c = next();
      out += c;
    }
    if (pos_ >= src_.size()) throw SyntaxError("unterminated quoted name", loc);
    next();
    return out;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

const char* const kRelOps[] = {"<", "=<", ">", ">=", "==", "\\=", ":::", "=:", "\\=:", "<:", "=<:", ">:", ">=:"};

class Parser {
 public:
  explicit Parser(std::vector<Tok> toks) : toks_(std::move(toks)) {}

  std::vector<NodePtr> program() {
    std::vector<NodePtr> out;
    while (peek().t != T::Eof) {
      auto blk = node(NK::Declare);
      if (kw("declare")) {
        ++i_;
        blk->decls = phrases();
        if (kw("in")) {
          ++i_;
          blk->items = phrases();
        }
      } else {
        blk->items = phrases();
        if (blk->items.empty()) fail("unexpected " + describe(peek()));
      }
      if (peek().t != T::Eof && !kw("declare")) fail("unexpected " + describe(peek()));
      out.push_back(std::move(blk));
    }
    return out;
  }

 private:
  const Tok& peek(std::size_t k = 0) const { return toks_[std::min(i_ + k, toks_.size() - 1)]; }
  bool kw(const char* w) const { return peek().t == T::Kw && peek().s == w; }
  bool sym(const char* s) const { return peek().t == T::Sym && peek().s == s; }

  static std::string describe(const Tok& t) {
    switch (t.t) {
      case T::Eof:
        return "end of input";
      case T::Int:
        return "integer " + t.s;
      default:
        return "'" + t.s + "'";
    }
  }

  [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(msg, peek().loc); }

  void expect_kw(const char* w) {
    if (!kw(w)) fail(std::string("expected '") + w + "' but found " + describe(peek()));
    ++i_;
  }
  void expect_sym(const char* s) {
    if (!sym(s)) fail(std::string("expected '") + s + "' but found " + describe(peek()));
    ++i_;
  }

  NodePtr node(NK k) const {
    auto n = std::make_unique<Node>();
    n->kind = k;
    n->loc = peek().loc;
    return n;
  }

  bool starts_phrase() const {
    const auto& t = peek();
    switch (t.t) {
      case T::Int:
      case T::Atom:
      case T::Var:
        return true;
      case T::Kw: {
        static const char* const starters[] = {"local", "proc",  "fun",    "if",  "case",
                                               "thread", "try", "raise", "choice", "dis", "skip"};
        if (std::find(std::begin(starters), std::end(starters), t.s) != std::end(starters)) return true;
        static const char* const unsupported[] = {"class", "functor", "for", "meth", "lock", "cond"};
        if (std::find(std::begin(unsupported), std::end(unsupported), t.s) != std::end(unsupported))
          fail("'" + t.s + "' is not supported by this interpreter");
        return false;
      }
      case T::Sym:
        return t.s == "(" || t.s == "[" || t.s == "{" || t.s == "~" || t.s == "_" || t.s == "$";
      case T::Eof:
        return false;
    }
    return false;
  }

  std::vector<NodePtr> phrases() {
    std::vector<NodePtr> out;
    while (starts_phrase()) out.push_back(expr());
    return out;
  }

  NodePtr body() {
    auto b = node(NK::Body);
    auto first = phrases();
    if (kw("in")) {
      ++i_;
      b->decls = std::move(first);
      b->items = phrases();
      if (b->items.empty()) fail("expected a statement after 'in'");
    } else {
      b->items = std::move(first);
    }
    if (b->items.empty()) fail("expected a statement but found " + describe(peek()));
    return b;
  }

  NodePtr binary(const std::string& op, NodePtr l, NodePtr r, Loc loc) {
    auto n = std::make_unique<Node>();
    n->kind = NK::Op;
    n->loc = loc;
    n->text = op;
    n->a = std::move(l);
    n->b = std::move(r);
    return n;
  }

  NodePtr expr() {
    auto l = rel();
    if (sym("=")) {
      Loc loc = peek().loc;
      ++i_;
      return binary("=", std::move(l), expr(), loc);
    }
    return l;
  }

  NodePtr rel() {
    auto l = cons();
    if (peek().t == T::Sym && std::find(std::begin(kRelOps), std::end(kRelOps), peek().s) != std::end(kRelOps)) {
      Loc loc = peek().loc;
      std::string op = peek().s;
      ++i_;
      return binary(op, std::move(l), cons(), loc);
    }
    return l;
  }

  NodePtr cons() {
    auto l = hash();
    if (sym("|")) {
      Loc loc = peek().loc;
      ++i_;
      return binary("|", std::move(l), cons(), loc);
    }
    return l;
  }

  NodePtr hash() {
    auto first = add();
    if (!sym("#")) return first;
    auto h = node(NK::Hash);
    h->loc = first->loc;
    h->items.push_back(std::move(first));
    while (sym("#")) {
      ++i_;
      h->items.push_back(add());
    }
    return h;
  }

  NodePtr add() {
    auto l = mul();
    while (sym("+") || sym("-")) {
      Loc loc = peek().loc;
      std::string op = peek().s;
      ++i_;
      l = binary(op, std::move(l), mul(), loc);
    }
    return l;
  }

  NodePtr mul() {
    auto l = unary();
    while (sym("*")) {
      Loc loc = peek().loc;
      ++i_;
      l = binary("*", std::move(l), unary(), loc);
    }
    return l;
  }

  NodePtr unary() {
    if (sym("~")) {
      auto n = node(NK::Neg);
      ++i_;
      n->a = unary();
      return n;
    }
    return dot();
  }

  NodePtr dot() {
    auto l = primary();
    while (sym(".")) {
      auto n = node(NK::Dot);
      ++i_;
      const auto& t = peek();
      if (t.t != T::Atom && t.t != T::Int && t.t != T::Var) fail("expected a feature after '.'");
      n->b = primary();
      n->loc = l->loc;
      n->a = std::move(l);
      l = std::move(n);
    }
    return l;
  }

  NodePtr record(std::string label) {
    auto n = node(NK::Rec);
    n->text = std::move(label);
    ++i_;
    expect_sym("(");
    while (!sym(")")) {
      if (peek().t == T::Eof) fail("unterminated record");
      const auto& t = peek();
      NodePtr feat;
      if ((t.t == T::Atom || t.t == T::Int) && peek(1).t == T::Sym && peek(1).s == ":") {
        feat = node(t.t == T::Atom ? NK::Atom : NK::Int);
        feat->text = t.s;
        feat->num = t.n;
        i_ += 2;
      }
      n->feats.push_back(std::move(feat));
      n->items.push_back(expr());
    }
    ++i_;
    return n;
  }

  NodePtr primary() {
    const Tok& t = peek();
    switch (t.t) {
      case T::Int: {
        auto n = node(NK::Int);
        n->num = t.n;
        n->text = t.s;
        ++i_;
        return n;
      }
      case T::Atom: {
        if (t.paren) return record(t.s);
        auto n = node(NK::Atom);
        n->text = t.s;
        ++i_;
        return n;
      }
      case T::Var: {
        auto n = node(NK::Var);
        n->text = t.s;
        ++i_;
        return n;
      }
      case T::Sym:
        return symbol_primary();
      case T::Kw:
        return keyword_primary();
      case T::Eof:
        break;
    }
    fail("unexpected " + describe(t));
  }

  NodePtr symbol_primary() {
    const Tok& t = peek();
    if (t.s == "_") {
      auto n = node(NK::Wild);
      ++i_;
      return n;
    }
    if (t.s == "$") {
      auto n = node(NK::Dollar);
      ++i_;
      return n;
    }
    if (t.s == "(") {
      ++i_;
      auto inner = expr();
      expect_sym(")");
      return inner;
    }
    if (t.s == "[") {
      Loc loc = t.loc;
      ++i_;
      std::vector<NodePtr> elems;
      while (!sym("]")) {
        if (!starts_phrase()) fail("expected a list element or ']' but found " + describe(peek()));
        elems.push_back(expr());
      }
      auto tail = node(NK::Atom);
      tail->text = "nil";
      ++i_;
      for (auto it = elems.rbegin(); it != elems.rend(); ++it) tail = binary("|", std::move(*it), std::move(tail), loc);
      return tail;
    }
    if (t.s == "{") {
      auto n = node(NK::Apply);
      ++i_;
      n->items.push_back(dot());
      while (!sym("}")) {
        if (!starts_phrase()) fail("expected an argument or '}' but found " + describe(peek()));
        n->items.push_back(expr());
      }
      ++i_;
      return n;
    }
    fail("unexpected " + describe(t));
  }

  NodePtr proc_like(NK kind) {
    auto n = node(kind);
    ++i_;
    if (kind == NK::Fun && kw("lazy")) {
      n->lazy = true;
      ++i_;
    }
    expect_sym("{");
    if (peek().t == T::Var) {
      n->a = primary();
    } else if (sym("$")) {
      n->a = node(NK::Dollar);
      ++i_;
    } else {
      fail("expected a procedure name or '$'");
    }
    while (!sym("}")) {
      if (peek().t == T::Var) {
        n->items.push_back(primary());
      } else if (sym("_")) {
        n->items.push_back(node(NK::Wild));
        ++i_;
      } else {
        fail("expected a parameter but found " + describe(peek()));
      }
    }
    ++i_;
    n->b = body();
    expect_kw("end");
    return n;
  }

  NodePtr if_tail() {
    auto n = node(NK::If);
    ++i_;
    n->a = expr();
    expect_kw("then");
    n->b = body();
    if (kw("elseif")) {
      auto b = node(NK::Body);
      b->items.push_back(if_tail());
      n->c = std::move(b);
      return n;
    }
    if (kw("else")) {
      ++i_;
      n->c = body();
    }
    expect_kw("end");
    return n;
  }

  NodePtr keyword_primary() {
    const std::string w = peek().s;
    if (w == "skip") {
      auto n = node(NK::Skip);
      ++i_;
      return n;
    }
    if (w == "local") {
      auto n = node(NK::Local);
      ++i_;
      n->a = body();
      expect_kw("end");
      return n;
    }
    if (w == "proc") return proc_like(NK::Proc);
    if (w == "fun") return proc_like(NK::Fun);
    if (w == "if") return if_tail();
    if (w == "case") {
      auto n = node(NK::Case);
      ++i_;
      n->a = expr();
      expect_kw("of");
      for (;;) {
        Clause c;
        c.pattern = expr();
        expect_kw("then");
        c.body = body();
        n->clauses.push_back(std::move(c));
        if (!sym("[]")) break;
        ++i_;
      }
      if (kw("else")) {
        ++i_;
        n->c = body();
      }
      expect_kw("end");
      return n;
    }
    if (w == "thread") {
      auto n = node(NK::Thread);
      ++i_;
      n->a = body();
      expect_kw("end");
      return n;
    }
    if (w == "try") {
      auto n = node(NK::Try);
      ++i_;
      n->a = body();
      expect_kw("catch");
      if (peek().t != T::Var) fail("expected a variable after 'catch'");
      n->b = primary();
      expect_kw("then");
      n->c = body();
      expect_kw("end");
      return n;
    }
    if (w == "raise") {
      auto n = node(NK::Raise);
      ++i_;
      n->a = body();
      expect_kw("end");
      return n;
    }
    if (w == "choice") {
      auto n = node(NK::Choice);
      ++i_;
      for (;;) {
        Clause c;
        c.body = body();
        n->clauses.push_back(std::move(c));
        if (!sym("[]")) break;
        ++i_;
      }
      if (kw("else")) fail("'else' is not allowed in a choice statement");
      expect_kw("end");
      return n;
    }
    if (w == "dis") {
      auto n = node(NK::Dis);
      ++i_;
      for (;;) {
        Clause c;
        c.pattern = body();
        expect_kw("then");
        c.body = body();
        n->clauses.push_back(std::move(c));
        if (!sym("[]")) break;
        ++i_;
      }
      expect_kw("end");
      return n;
    }
    fail("unexpected keyword '" + w + "'");
  }

  std::vector<Tok> toks_;
  std::size_t i_ = 0;
};

}  // namespace

std::vector<NodePtr> parse(std::string_view source) {
  Lexer lx(source);
  Parser p(lx.run());
  return p.program();
}

}  // namespace ks
