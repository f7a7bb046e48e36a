#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <regex>

#include "kernelspace/driver.hpp"
#include "kernelspace/vm.hpp"
#include "support.hpp"

using namespace ks;

namespace {

const char* kAppend = R"(declare
proc {Append Xs Ys Zs}
   case Xs
   of nil then Zs=Ys
   [] X|Xr then Zr in
      Zs=X|Zr {Append Xr Ys Zr}
   end
end
)";

std::vector<std::string> run_log(const std::string& src, RunConfig cfg = {}) {
  auto e = execute(src, cfg);
  EXPECT_EQ(e.exit, kExitOk) << kt::join(e.diagnostics, "\n");
  return e.log;
}

std::int64_t closed_sum(std::int64_t n) { return n * (n - 1) / 2; }

}  // namespace

TEST(Vm, AppendFirstCallCompletesSecondSuspends) {
  std::vector<std::string> events;
  RunConfig cfg;
  cfg.trace = [&](const std::string& e) { events.push_back(e); };
  VM vm(cfg);
  vm.load(kAppend);
  vm.load("declare X Y A B in {Append [1] X Y} thread {Append A [2] B} end");
  EXPECT_EQ(vm.run(), RunStatus::Quiescent);
  EXPECT_EQ(vm.render(vm.global("Y")), "1|_");
  EXPECT_EQ(vm.render(vm.global("B")), "_");
  ASSERT_FALSE(events.empty());
  // exactly one thread is left suspended: the second call
  std::vector<std::string> suspends;
  for (const auto& e : events)
    if (e.find(" suspend(") != std::string::npos) suspends.push_back(e);
  ASSERT_EQ(suspends.size(), 1u);
  std::string tid = suspends[0].substr(0, suspends[0].find(' '));
  EXPECT_EQ(events.back(), suspends[0]);

  events.clear();
  vm.load("A=[7]");
  EXPECT_EQ(vm.run(), RunStatus::Halted);
  EXPECT_EQ(vm.render(vm.global("B")), "[7 2]");
  EXPECT_NE(std::find(events.begin(), events.end(), tid + " wake"), events.end());
  EXPECT_NE(std::find(events.begin(), events.end(), tid + " exit"), events.end());
}

TEST(Vm, TraceLinesFollowFormat) {
  std::vector<std::string> events;
  RunConfig cfg;
  cfg.trace = [&](const std::string& e) { events.push_back(e); };
  execute(std::string(kAppend) +
              "declare X Y in thread {Append X [1] Y} end X=[2]\n"
              "try raise oops end catch E then skip end\n"
              "{Browse {Search.base.all proc {$ R} choice R=1 [] R=2 end end}}",
          cfg);
  std::regex line(R"(T\d+@S\d+ (spawn|suspend\(V\d+\)|wake|choose\(\d+\)|commit\(\d+\)|raise|exit))");
  ASSERT_FALSE(events.empty());
  std::set<std::string> kinds;
  for (const auto& e : events) {
    EXPECT_TRUE(std::regex_match(e, line)) << e;
    kinds.insert(e.substr(e.find(' ') + 1, 4));
  }
  for (const char* k : {"spaw", "susp", "wake", "choo", "comm", "rais", "exit"}) EXPECT_TRUE(kinds.count(k)) << k;
}

TEST(Vm, ArithmeticWaitsForDataflow) {
  auto log = run_log("declare X Y Z in thread Z=X+Y end thread Y=X*3 end X=4 {Wait Z} {Browse Z}");
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0], std::to_string(4 + 4 * 3));
}

TEST(Vm, NegativeIntegersRenderWithTilde) { EXPECT_EQ(run_log("{Browse 3-10}"), std::vector<std::string>{"~7"}); }

TEST(Vm, RecordsAndPatternMatching) {
  auto log = run_log(
      "declare R in R=point(x:1 y:2 3)\n"
      "case R of point(C x:A y:B) then {Browse A#B} end\n"
      "{Browse R.y}\n"
      "{Browse R}");
  EXPECT_EQ(log, (std::vector<std::string>{"1#2", "2", "point(3 x:1 y:2)"}));
}

TEST(Vm, CaseFallsThroughToElse) {
  auto log = run_log("case f(1) of g(X) then {Browse X} else {Browse no} end");
  EXPECT_EQ(log, std::vector<std::string>{"no"});
}

TEST(Vm, ExceptionsUnwindToNearestHandler) {
  auto log = run_log(
      "declare proc {Deep N} if N==0 then raise bottom(N) end else {Deep N-1} end end\n"
      "try {Deep 50} catch E then {Browse E} end\n"
      "try try raise inner end catch X then raise outer(X) end end catch Y then {Browse Y} end");
  EXPECT_EQ(log, (std::vector<std::string>{"bottom(0)", "outer(inner)"}));
}

TEST(Vm, UnificationFailureIsAnException) {
  auto log = run_log("try 1=2 catch E then {Browse caught} end");
  EXPECT_EQ(log, std::vector<std::string>{"caught"});
}

TEST(Vm, UncaughtExceptionExitsOne) {
  auto e = execute("{Browse before} raise boom end {Browse after}", {});
  EXPECT_EQ(e.exit, kExitUncaught);
  EXPECT_EQ(e.log, std::vector<std::string>{"before"});
  ASSERT_FALSE(e.diagnostics.empty());
  EXPECT_NE(kt::join(e.diagnostics).find("boom"), std::string::npos);
}

TEST(Vm, ParseAndCompileErrorsExitTwo) {
  EXPECT_EQ(execute("local X in X = end", {}).exit, kExitParse);
  EXPECT_EQ(execute("{Browse Undefined}", {}).exit, kExitParse);
}

TEST(Vm, BudgetExhaustionExitsThree) {
  RunConfig cfg;
  cfg.max_reductions = 10'000;
  auto e = execute("declare proc {Loop} {Loop} end {Loop}", cfg);
  EXPECT_EQ(e.exit, kExitBudget);
  EXPECT_LE(e.stats.reductions, cfg.max_reductions + cfg.slice);
}

TEST(Vm, DeadlockExitsFour) {
  auto e = execute("declare X in {Wait X} {Browse never}", {});
  EXPECT_EQ(e.exit, kExitDeadlock);
  EXPECT_TRUE(e.log.empty());
  EXPECT_EQ(execute("declare X in {Wait X}", {}, true).exit, kExitOk);
}

TEST(Vm, HaltingProgramExitsZero) { EXPECT_EQ(execute("{Browse done}", {}).exit, kExitOk); }

TEST(Vm, CellsAndPorts) {
  auto log = run_log(
      "declare C P S in C={NewCell 0}\n"
      "{ForAll [1 2 3 4 5 6 7 8 9 10] proc {$ I} O N in {Exchange C O N} N=O+I end}\n"
      "local V in {Exchange C V V} {Browse V} end\n"
      "P={NewPort S} {Send P a} {Send P b}\n"
      "case S of X|Y|_ then {Browse X#Y} end");
  EXPECT_EQ(log, (std::vector<std::string>{"55", "a#b"}));
}

TEST(Vm, NamesAreUniqueAndRenderOpaque) {
  auto log = run_log("declare A B in A={NewName} B={NewName} {Browse A==B} {Browse A==A} {Browse A}");
  EXPECT_EQ(log, (std::vector<std::string>{"false", "true", "<Name>"}));
}

TEST(Vm, ProceduresRenderWithArity) {
  auto log = run_log("declare proc {P A B C} skip end {Browse P} {Browse Browse}");
  EXPECT_EQ(log, (std::vector<std::string>{"<P/3>", "<P/1>"}));
}

TEST(Vm, IsDetDoesNotBlock) {
  auto log = run_log("declare X in {Browse {IsDet X}} X=1 {Browse {IsDet X}}");
  EXPECT_EQ(log, (std::vector<std::string>{"false", "true"}));
}

TEST(Vm, ByNeedFiresOnlyWhenNeeded) {
  auto e = execute(
      "declare X Y Z in {ByNeed proc {$ R} R=5 end X} {ByNeed proc {$ R} R=6 end Y}\n"
      "{Browse X+1} {Wait Z}",
      {}, true);
  EXPECT_EQ(e.log, std::vector<std::string>{"6"});
  EXPECT_EQ(e.stats.trigger_installs, 2);
  EXPECT_EQ(e.stats.trigger_firings, 1);
}

TEST(Vm, BindingANeededVariableFiresItsTrigger) {
  auto e = execute("declare X in {ByNeed proc {$ R} R=5 end X} try X=6 catch E then {Browse clash} end {Browse X}",
                   {});
  EXPECT_EQ(e.log, (std::vector<std::string>{"clash", "5"}));
  EXPECT_EQ(e.stats.trigger_firings, 1);
}

TEST(Vm, EagerSumMatchesClosedForm) {
  for (std::int64_t n : {0, 1, 10, 1000}) {
    std::string src =
        "declare fun {Generate N Limit} if N<Limit then N|{Generate N+1 Limit} else nil end end\n"
        "fun {Sum Xs A} case Xs of X|Xr then {Sum Xr A+X} [] nil then A end end\n"
        "local Xs S in thread Xs={Generate 0 " +
        std::to_string(n) + "} end thread S={Sum Xs 0} end {Browse S} {Wait S} end";
    EXPECT_EQ(run_log(src), std::vector<std::string>{std::to_string(closed_sum(n))}) << n;
  }
}

TEST(Vm, LazySumNeedsOneCellPerElement) {
  for (std::int64_t n : {1, 5, 1000}) {
    std::string src =
        "declare fun lazy {Generate N} N|{Generate N+1} end\n"
        "proc {Sum Xs Limit A S} if Limit>0 then case Xs of X|Xr then {Sum Xr Limit-1 A+X S} end else S=A end end\n"
        "local Xs S in thread Xs={Generate 0} end thread {Sum Xs " +
        std::to_string(n) + " 0 S} end {Browse S} {Wait S} end";
    auto e = execute(src, {});
    EXPECT_EQ(e.log, std::vector<std::string>{std::to_string(closed_sum(n))}) << n;
    EXPECT_EQ(e.stats.trigger_firings, n);
    EXPECT_EQ(e.stats.trigger_installs, n + 1);
  }
}

TEST(Vm, ResultIsIndependentOfQueueOrderAndSlice) {
  std::mt19937 rng(7);
  for (int round = 0; round < 20; ++round) {
    auto src = kt::random_concurrent_program(rng);
    std::vector<std::string> ref;
    bool first = true;
    for (std::int64_t slice : {1, 7, 1000}) {
      for (bool rev : {false, true}) {
        RunConfig cfg;
        cfg.slice = slice;
        cfg.reverse_queue = rev;
        auto e = execute(src, cfg);
        ASSERT_EQ(e.exit, kExitOk) << src << kt::join(e.diagnostics, "\n");
        if (first) ref = e.log;
        first = false;
        EXPECT_EQ(e.log, ref) << "slice " << slice << " rev " << rev << "\n" << src;
      }
    }
  }
}

TEST(Vm, DeclarativeCorpusIsScheduleIndependent) {
  auto corpus = load_corpus(std::filesystem::path(KS_SOURCE_DIR) / "corpus");
  int checked = 0;
  for (const auto& c : corpus) {
    bool declarative = true;
    for (const auto& t : c.tags)
      if (t == "state" || t == "search" || t == "fd") declarative = false;
    if (!declarative) continue;
    ++checked;
    for (std::int64_t slice : {1, 7, 1000}) {
      for (bool rev : {false, true}) {
        RunConfig cfg;
        cfg.slice = slice;
        cfg.reverse_queue = rev;
        auto e = execute(c.source, cfg, c.expected_exit == kExitDeadlock);
        EXPECT_EQ(e.log, c.golden) << c.id << " slice " << slice << " rev " << rev;
      }
    }
  }
  EXPECT_GE(checked, 5);
}

TEST(Vm, StateIsConfinedToTheTopSpace) {
  auto log = run_log(
      "declare C={NewCell 0} in\n"
      "{Browse {Search.base.all proc {$ R} try {Exchange C _ 1} R=ok catch E then R=E.kind end end}}");
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0], "[state]");
}
