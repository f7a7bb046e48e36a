#include <gtest/gtest.h>

#include <random>

#include "kernelspace/driver.hpp"
#include "support.hpp"

using namespace ks;

namespace {

std::vector<std::string> run(const std::string& src) {
  auto e = execute(src, {});
  EXPECT_EQ(e.exit, kExitOk) << src << "\n" << kt::join(e.diagnostics, "\n");
  return e.log;
}

std::string nondet_append() {
  return "declare\n"
         "proc {Append Xs Ys Zs}\n"
         "   choice Xs=nil Zs=Ys\n"
         "   [] X Xr Zr in Xs=X|Xr Zs=X|Zr {Append Xr Ys Zr}\n"
         "   end\n"
         "end\n";
}

std::string object_session(const std::string& script, std::size_t calls) {
  std::string s = "declare E in E={New Search.object script(" + script + ")}\n";
  for (std::size_t i = 0; i < calls; ++i) s += "local X in {E next(X)} {Browse X} end\n";
  return s;
}

}  // namespace

TEST(Search, AllOneAndObjectAgreeWithChoiceTreeOracle) {
  std::mt19937 rng(31);
  for (int i = 0; i < 300; ++i) {
    int counter = 0;
    auto t = kt::random_choice_tree(rng, "R", 3, counter);
    std::string script = "proc {$ R} " + t.body + " end";
    auto log = run("{Browse {Search.base.all " + script + "}}\n{Browse {Search.base.one " + script + "}}");
    ASSERT_EQ(log.size(), 2u);
    ASSERT_EQ(log[0], kt::render_list(t.solutions)) << script;
    ASSERT_EQ(log[1], t.solutions.empty() ? "nil" : "[" + t.solutions[0] + "]") << script;

    auto obj = run(object_session(script, t.solutions.size() + 2));
    std::vector<std::string> expect;
    for (const auto& s : t.solutions) expect.push_back("[" + s + "]");
    expect.push_back("nil");
    expect.push_back("nil");
    ASSERT_EQ(obj, expect) << script;
  }
}

TEST(Search, NondeterministicAppendEnumeratesSplitsInOrder) {
  for (int n = 0; n <= 6; ++n) {
    std::vector<std::string> xs;
    for (int k = 1; k <= n; ++k) xs.push_back(std::to_string(k));
    std::vector<std::string> expect;
    for (int k = 0; k <= n; ++k) {
      std::vector<std::string> a(xs.begin(), xs.begin() + k), b(xs.begin() + k, xs.end());
      expect.push_back("sol(" + kt::render_list(a) + " " + kt::render_list(b) + ")");
    }
    auto log = run(nondet_append() + "{Browse {Search.base.all proc {$ S} X Y in {Append X Y " + kt::render_list(xs) +
                   "} S=sol(X Y) end}}");
    ASSERT_EQ(log.size(), 1u);
    EXPECT_EQ(log[0], kt::render_list(expect)) << n;
  }
}

TEST(Search, ObjectSessionOnAppend) {
  auto log = run(nondet_append() + object_session("proc {$ S} X Y in {Append X Y [1 2 3 4 5]} S=sol(X Y) end", 8));
  ASSERT_EQ(log.size(), 8u);
  EXPECT_EQ(log[0], "[sol(nil [1 2 3 4 5])]");
  EXPECT_EQ(log[5], "[sol([1 2 3 4 5] nil)]");
  EXPECT_EQ(log[6], "nil");
  EXPECT_EQ(log[7], "nil");
}

TEST(Search, ClosedObjectRaises) {
  auto log = run(nondet_append() +
                 "declare E in E={New Search.object script(proc {$ S} {Append S _ [1]} end)}\n"
                 "{E close}\n"
                 "try local X in {E next(X)} end catch Err then {Browse Err.kind} end");
  EXPECT_EQ(log, std::vector<std::string>{"search"});
}

TEST(Search, ChildrenQueriesMatchFactOracle) {
  std::string src = "declare\n" + kt::father_source();
  std::map<std::string, std::vector<std::string>> kids;
  std::vector<std::string> all, fathers;
  for (const auto& [f, c] : kt::father_facts()) {
    if (!kids.count(f)) fathers.push_back(f);
    kids[f].push_back(c);
    all.push_back(c);
  }
  for (const auto& f : fathers) src += "{Browse {Search.base.all proc {$ C} {Father " + f + " C} end}}\n";
  src += "{Browse {Search.base.all proc {$ C} {Father _ C} end}}\n";
  src += "{Browse {Search.base.all proc {$ F} {Father F lot} end}}\n";
  auto log = run(src);
  ASSERT_EQ(log.size(), fathers.size() + 2);
  for (std::size_t i = 0; i < fathers.size(); ++i) EXPECT_EQ(log[i], kt::render_list(kids[fathers[i]])) << fathers[i];
  EXPECT_EQ(log[fathers.size()], kt::render_list(all));
  EXPECT_EQ(log.back(), "[haran]");
}

TEST(Search, BranchAndBoundFindsTheMinimum) {
  std::mt19937 rng(5);
  int with_solutions = 0;
  for (int i = 0; i < 150; ++i) {
    auto m = kt::random_model(rng, 3, 6);
    auto sols = m.brute_force();
    std::string order =
        "proc {$ Old New} case Old of O|_ then case New of N|_ then N <: O end end end";
    auto log = run("{Browse {Search.bab " + m.script() + " " + order + "}}");
    ASSERT_EQ(log.size(), 1u);
    if (sols.empty()) {
      EXPECT_EQ(log[0], "nil") << m.script();
      continue;
    }
    ++with_solutions;
    auto best = std::min_element(sols.begin(), sols.end(), [](auto& a, auto& b) { return a[0] < b[0]; });
    auto got = kt::ints_in(log[0]);
    ASSERT_EQ(got.size(), m.doms.size()) << log[0];
    EXPECT_EQ(got[0], (*best)[0]) << m.script();
    EXPECT_TRUE(sols.count(got)) << m.script() << " gave " << log[0];
  }
  EXPECT_GT(with_solutions, 20);
}

TEST(Search, DisCommitsWithoutChoosingWhenOneGuardSurvives) {
  std::string pick =
      "declare\n"
      "proc {Pick X R}\n"
      "   dis X=a then R=1\n"
      "   [] X=b then R=2\n"
      "   [] X=c then R=3\n"
      "   end\n"
      "end\n";
  auto one = execute(pick + "{Browse {Search.base.all proc {$ R} X in X=b {Pick X R} end}}", {});
  EXPECT_EQ(one.log, std::vector<std::string>{"[2]"});
  EXPECT_EQ(one.stats.choose_events, 0);

  auto top = execute(pick + "local R in {Pick c R} {Browse R} end", {});
  EXPECT_EQ(top.exit, kExitOk);
  EXPECT_EQ(top.log, std::vector<std::string>{"3"});
  EXPECT_EQ(top.stats.choose_events, 0);

  auto many = execute(pick + "{Browse {Search.base.all proc {$ R} X in {Pick X R} end}}", {});
  EXPECT_EQ(many.log, std::vector<std::string>{"[1 2 3]"});
  EXPECT_EQ(many.stats.choose_events, 1);

  auto none = execute(pick + "{Browse {Search.base.all proc {$ R} X in X=d {Pick X R} end}}", {});
  EXPECT_EQ(none.log, std::vector<std::string>{"nil"});
  EXPECT_EQ(none.stats.choose_events, 0);
}

TEST(Search, DisSurvivorsKeepGuardOrder) {
  // guards 1 and 4 fail against the domain; 2 and 3 survive in order
  auto e = execute(
      "declare\n"
      "proc {P X R}\n"
      "   dis X=1 then R=one\n"
      "   [] X=2 then R=two\n"
      "   [] X=3 then R=three\n"
      "   [] X=9 then R=nine\n"
      "   end\n"
      "end\n"
      "{Browse {Search.base.all proc {$ R} X in X:::2#3 {P X R} end}}",
      {});
  EXPECT_EQ(e.log, std::vector<std::string>{"[two three]"});
  EXPECT_EQ(e.stats.choose_events, 1);
}

TEST(Search, DisGuardBindingsReachTheBody) {
  auto log = run(
      "{Browse {Search.base.all proc {$ R} X Y in\n"
      "   dis X=f(Y) then R=Y [] X=g then R=none end\n"
      "   X=f(5)\n"
      "end}}");
  EXPECT_EQ(log, std::vector<std::string>{"[5]"});
}

TEST(Search, EnginesOnlyUseSpaceOperations) {
  auto e = execute(nondet_append() + "{Browse {Search.base.all proc {$ S} {Append _ _ [1 2] } S=x end}}", {});
  // Choose is issued by the script inside its space, never by the engine
  std::set<std::string> allowed = {"NewSpace", "Ask", "Commit", "Clone", "Merge", "Inject", "Choose"};
  ASSERT_FALSE(e.stats.space_ops.empty());
  for (const auto& [op, n] : e.stats.space_ops) EXPECT_TRUE(allowed.count(op)) << op;
  EXPECT_GT(e.stats.space_ops.at("Clone"), 0);
}

TEST(Search, ChooseAtTopLevelIsAnError) {
  auto log = run("try choice {Browse a} [] {Browse b} end catch E then {Browse E.kind} end");
  EXPECT_EQ(log, std::vector<std::string>{"space"});
}
