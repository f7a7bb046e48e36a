#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kernelspace/driver.hpp"
#include "kernelspace/vm.hpp"

namespace kt {

inline std::string join(const std::vector<std::string>& xs, const std::string& sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

inline std::string render_list(const std::vector<std::string>& xs) { return xs.empty() ? "nil" : "[" + join(xs) + "]"; }

// Integers appearing in a rendered term, in order.
inline std::vector<std::int64_t> ints_in(const std::string& s) {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < s.size();) {
    bool neg = s[i] == '~';
    std::size_t j = neg ? i + 1 : i;
    if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
      std::int64_t v = 0;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) v = v * 10 + (s[j++] - '0');
      out.push_back(neg ? -v : v);
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

// ---------------------------------------------------------------- FD models

struct Constraint {
  enum Kind { Linear, Mult, Distinct } kind = Linear;
  std::vector<std::int64_t> coefs;
  std::vector<int> vars;
  std::string op;  // =: =<: \=: <: >=: >:
  std::int64_t k = 0;
};

struct FdModel {
  std::vector<std::pair<std::int64_t, std::int64_t>> doms;
  std::vector<Constraint> cons;

  bool holds(const Constraint& c, const std::vector<std::int64_t>& a) const {
    switch (c.kind) {
      case Constraint::Linear: {
        std::int64_t s = 0;
        for (std::size_t i = 0; i < c.vars.size(); ++i) s += c.coefs[i] * a[static_cast<std::size_t>(c.vars[i])];
        if (c.op == "=:") return s == c.k;
        if (c.op == "=<:") return s <= c.k;
        if (c.op == "\\=:") return s != c.k;
        if (c.op == "<:") return s < c.k;
        if (c.op == ">=:") return s >= c.k;
        return s > c.k;
      }
      case Constraint::Mult:
        return a[static_cast<std::size_t>(c.vars[0])] * a[static_cast<std::size_t>(c.vars[1])] ==
               a[static_cast<std::size_t>(c.vars[2])];
      case Constraint::Distinct: {
        std::set<std::int64_t> seen;
        for (auto v : c.vars) seen.insert(a[static_cast<std::size_t>(v)]);
        return seen.size() == c.vars.size();
      }
    }
    return false;
  }

  // Every assignment inside the domains satisfying all constraints.
  std::set<std::vector<std::int64_t>> brute_force() const {
    std::set<std::vector<std::int64_t>> out;
    std::vector<std::int64_t> a(doms.size());
    std::function<void(std::size_t)> go = [&](std::size_t i) {
      if (i == doms.size()) {
        for (const auto& c : cons)
          if (!holds(c, a)) return;
        out.insert(a);
        return;
      }
      for (auto v = doms[i].first; v <= doms[i].second; ++v) {
        a[i] = v;
        go(i + 1);
      }
    };
    go(0);
    return out;
  }

  static std::string var(int i) { return "X" + std::to_string(i + 1); }

  static std::string term(std::int64_t c, int v, bool first) {
    std::string s;
    if (first) s = c < 0 ? "~" : "";
    else s = c < 0 ? " - " : " + ";
    return s + std::to_string(c < 0 ? -c : c) + "*" + var(v);
  }

  static std::string constraint_source(const Constraint& c) {
    switch (c.kind) {
      case Constraint::Linear: {
        std::string s;
        for (std::size_t i = 0; i < c.vars.size(); ++i) s += term(c.coefs[i], c.vars[i], i == 0);
        std::string k = c.k < 0 ? "~" + std::to_string(-c.k) : std::to_string(c.k);
        return s + " " + c.op + " " + k;
      }
      case Constraint::Mult:
        return var(c.vars[0]) + "*" + var(c.vars[1]) + " =: " + var(c.vars[2]);
      case Constraint::Distinct: {
        std::vector<std::string> vs;
        for (auto v : c.vars) vs.push_back(var(v));
        return "{FD.distinct [" + join(vs) + "]}";
      }
    }
    return "";
  }

  // A unary procedure posting the model and distributing first-fail.
  std::string script() const {
    std::vector<std::string> vs;
    for (std::size_t i = 0; i < doms.size(); ++i) vs.push_back(var(static_cast<int>(i)));
    std::string s = "proc {$ S} " + join(vs) + " in S=[" + join(vs) + "]";
    for (std::size_t i = 0; i < doms.size(); ++i)
      s += " " + vs[i] + ":::" + std::to_string(doms[i].first) + "#" + std::to_string(doms[i].second);
    for (const auto& c : cons) s += " " + constraint_source(c);
    return s + " {FD.distribute ff S} end";
  }

  std::string all_program() const { return "{ForAll {Search.base.all " + script() + "} Browse}"; }
};

inline FdModel random_model(std::mt19937& rng, int max_vars = 4, std::int64_t top = 6) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  FdModel m;
  int n = pick(1, max_vars);
  for (int i = 0; i < n; ++i) {
    std::int64_t lo = pick(0, static_cast<int>(top)), hi = pick(0, static_cast<int>(top));
    if (lo > hi) std::swap(lo, hi);
    m.doms.emplace_back(lo, hi);
  }
  static const char* const ops[] = {"=:", "=<:", "\\=:", "<:", ">=:", ">:"};
  int nc = pick(1, 3);
  for (int j = 0; j < nc; ++j) {
    Constraint c;
    int kind = pick(0, 9);
    if (kind <= 5 || n < 2) {
      c.kind = Constraint::Linear;
      int terms = pick(1, std::min(n, 3));
      std::vector<int> idx(static_cast<std::size_t>(n));
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      for (int t = 0; t < terms; ++t) {
        int coef = 0;
        while (coef == 0) coef = pick(-3, 3);
        c.coefs.push_back(coef);
        c.vars.push_back(idx[static_cast<std::size_t>(t)]);
      }
      c.op = ops[pick(0, 5)];
      c.k = pick(-4, 14);
    } else if (kind <= 7) {
      c.kind = Constraint::Mult;
      c.vars = {pick(0, n - 1), pick(0, n - 1), pick(0, n - 1)};
    } else {
      c.kind = Constraint::Distinct;
      std::vector<int> idx(static_cast<std::size_t>(n));
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(static_cast<std::size_t>(pick(2, n)));
      c.vars = idx;
    }
    m.cons.push_back(c);
  }
  return m;
}

// Solutions found by the engine, each as an assignment vector.
inline std::set<std::vector<std::int64_t>> engine_solutions(const FdModel& m, bool* duplicates = nullptr,
                                                            int* exit = nullptr) {
  auto e = ks::execute(m.all_program(), {});
  if (exit) *exit = e.exit;
  std::set<std::vector<std::int64_t>> out;
  for (const auto& line : e.log) {
    bool fresh = out.insert(ints_in(line)).second;
    if (!fresh && duplicates) *duplicates = true;
  }
  return out;
}

// ---------------------------------------------------------------- Fractions

inline std::set<std::vector<std::int64_t>> fractions_oracle() {
  std::set<std::vector<std::int64_t>> out;
  std::vector<std::int64_t> p = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  do {
    auto A = p[0], B = p[1], C = p[2], D = p[3], E = p[4], F = p[5], G = p[6], H = p[7], I = p[8];
    auto BC = 10 * B + C, EF = 10 * E + F, HI = 10 * H + I;
    if (A * EF * HI + D * BC * HI + G * BC * EF == BC * EF * HI) out.insert(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

inline const char* fractions_program() {
  return R"(declare
proc {Fractions Sol}
   A B C D E F G H I BC EF HI
in
   Sol=sol(a:A b:B c:C d:D e:E f:F g:G h:H i:I)
   BC={FD.decl} EF={FD.decl} HI={FD.decl}
   Sol:::1#9
   {FD.distinct Sol}
   BC=:10*B+C
   EF=:10*E+F
   HI=:10*H+I
   A*EF*HI+D*BC*HI+G*BC*EF=:BC*EF*HI
   {FD.distribute ff Sol}
end
{ForAll {Search.base.all Fractions} Browse}
)";
}

// ---------------------------------------------------------------- Father facts

inline const std::vector<std::pair<std::string, std::string>>& father_facts() {
  static const std::vector<std::pair<std::string, std::string>> f = {
      {"terach", "abraham"}, {"terach", "nachor"}, {"terach", "haran"},  {"abraham", "isaac"},
      {"haran", "lot"},      {"haran", "milcah"},  {"haran", "yiscah"},
  };
  return f;
}

inline std::string father_source() {
  std::string s = "proc {Father F C}\n   choice";
  bool first = true;
  for (const auto& [f, c] : father_facts()) {
    s += std::string(first ? " " : "\n   [] ") + "F=" + f + " C=" + c;
    first = false;
  }
  return s + "\n   end\nend\n";
}

// ---------------------------------------------------------------- choice trees

// A random program built from nested choice statements together with the
// solutions a left-to-right enumeration of its choices produces.
struct ChoiceTree {
  std::string body;                    // statement binding R
  std::vector<std::string> solutions;  // rendered, in order
};

inline ChoiceTree random_choice_tree(std::mt19937& rng, const std::string& r, int depth, int& counter) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  int kind = depth == 0 ? pick(0, 1) : pick(0, 4);
  ChoiceTree t;
  if (kind == 0) {
    static const char* const leaves[] = {"a", "b", "c", "0", "1", "2", "7"};
    std::string v = leaves[pick(0, 6)];
    t.body = r + "=" + v;
    t.solutions = {v};
  } else if (kind == 1) {
    t.body = "1=2";
  } else if (kind <= 3) {
    int n = pick(2, 3);
    t.body = "choice ";
    for (int i = 0; i < n; ++i) {
      auto c = random_choice_tree(rng, r, depth - 1, counter);
      if (i) t.body += " [] ";
      t.body += c.body;
      t.solutions.insert(t.solutions.end(), c.solutions.begin(), c.solutions.end());
    }
    t.body += " end";
  } else {
    std::string a = "V" + std::to_string(counter++), b = "V" + std::to_string(counter++);
    auto x = random_choice_tree(rng, a, depth - 1, counter);
    auto y = random_choice_tree(rng, b, depth - 1, counter);
    t.body = "local " + a + " " + b + " in " + r + "=p(" + a + " " + b + ") " + x.body + " " + y.body + " end";
    for (const auto& s1 : x.solutions)
      for (const auto& s2 : y.solutions) t.solutions.push_back("p(" + s1 + " " + s2 + ")");
  }
  return t;
}

// ---------------------------------------------------------------- concurrent programs

// A random program whose threads communicate only through dataflow
// variables and by-need computations. The final values do not depend on
// scheduling; the main thread browses all of them.
inline std::string random_concurrent_program(std::mt19937& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  int n = pick(4, 9);
  std::vector<std::string> defs(static_cast<std::size_t>(n));
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("X" + std::to_string(i));
  // Integer-valued variables feed arithmetic; any variable feeds records.
  std::vector<int> ints;
  for (int i = 0; i < n; ++i) {
    auto x = names[static_cast<std::size_t>(i)];
    auto& d = defs[static_cast<std::size_t>(i)];
    if (i < 2) {
      d = x + "=" + std::to_string(pick(0, 9));
      ints.push_back(i);
      continue;
    }
    auto any = [&] { return names[static_cast<std::size_t>(pick(0, i - 1))]; };
    auto num = [&] { return names[static_cast<std::size_t>(ints[static_cast<std::size_t>(pick(0, static_cast<int>(ints.size()) - 1))])]; };
    auto a = num(), b = num();
    int kind = pick(0, 6);
    switch (kind) {
      case 0:
        d = x + "=" + a + "+" + b;
        break;
      case 1:
        d = x + "=" + a + "*" + b + "-" + a;
        break;
      case 2:
        d = "if " + a + "<" + b + " then " + x + "=" + a + " else " + x + "=" + b + " end";
        break;
      case 3:
        d = x + "=f(" + any() + " " + any() + ")";
        break;
      case 4:
        d = x + "={Nth {Gen " + a + "} " + std::to_string(pick(1, 5)) + "}";
        break;
      case 5:
        d = x + "={Lazy " + a + "}+1";
        break;
      default:
        d = "case " + any() + "#" + any() + " of P#Q then " + x + "=[P Q] end";
        break;
    }
    if (kind <= 2 || kind == 4 || kind == 5) ints.push_back(i);
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::string s =
      "declare\n"
      "fun lazy {Gen N} N|{Gen N+1} end\n"
      "fun {Nth Xs I} case Xs of X|Xr then if I==1 then X else {Nth Xr I-1} end end end\n"
      "fun {Lazy X} R in {ByNeed proc {$ Y} Y=X*2 end R} R end\n"
      "local " + join(names) + " in\n";
  for (int i : order) s += "   thread " + defs[static_cast<std::size_t>(i)] + " end\n";
  for (const auto& x : names) s += "   {Browse " + x + "}\n";
  s += "   {Wait " + names.back() + "}\nend\n";
  return s;
}

}  // namespace kt
