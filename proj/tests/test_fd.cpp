#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "kernelspace/driver.hpp"
#include "kernelspace/vm.hpp"
#include "properties.hpp"

using namespace ks;
using fd::Domain;

namespace {

struct Fd {
  VM vm;
  Term var(std::int64_t lo, std::int64_t hi) {
    Term x = vm.store().fresh(kTopSpace);
    vm.store().narrow(x, Domain::range(lo, hi), kTopSpace);
    return x;
  }
  Term open_var() {
    Term x = vm.store().fresh(kTopSpace);
    vm.store().narrow(x, Domain::full(), kTopSpace);
    return x;
  }
  Domain dom(Term x) {
    Term v = vm.deref(x);
    if (v.is_int()) return Domain::singleton(v.v);
    const Domain* d = vm.store().domain(v.v, kTopSpace);
    return d ? *d : Domain::full();
  }
  std::string show(Term x) { return dom(x).to_string(); }
};

std::string range(std::int64_t lo, std::int64_t hi) { return Domain::range(lo, hi).to_string(); }

}  // namespace

TEST(Fd, LinearSumPrunesBounds) {
  Fd f;
  Term x = f.var(0, 9), y = f.var(0, 9);
  f.vm.post_linear({1, 1}, {x, y}, Propagator::Eq, 2);
  EXPECT_TRUE(f.vm.propagate());
  EXPECT_EQ(f.show(x), range(0, 2));
  EXPECT_EQ(f.show(y), range(0, 2));
}

TEST(Fd, LinearTwoDigitNumber) {
  Fd f;
  Term b = f.var(1, 9), c = f.var(1, 9), bc = f.open_var();
  f.vm.post_linear({10, 1, -1}, {b, c, bc}, Propagator::Eq, 0);
  EXPECT_TRUE(f.vm.propagate());
  EXPECT_EQ(f.show(bc), range(11, 99));
}

TEST(Fd, LinearDifference) {
  Fd f;
  Term x = f.var(3, 5), y = f.var(4, 8);
  f.vm.post_linear({1, -1}, {x, y}, Propagator::Eq, 0);
  EXPECT_TRUE(f.vm.propagate());
  EXPECT_EQ(f.show(x), range(4, 5));
  EXPECT_EQ(f.show(y), range(4, 5));
}

TEST(Fd, MultBounds) {
  Fd f;
  Term x = f.var(2, 3), y = f.var(4, 5), z = f.open_var();
  f.vm.post_mult(x, y, z);
  EXPECT_TRUE(f.vm.propagate());
  EXPECT_EQ(f.show(z), range(8, 15));

  Fd g;
  Term a = g.open_var(), b = g.var(4, 4), c = g.var(8, 8);
  g.vm.post_mult(a, b, c);
  EXPECT_TRUE(g.vm.propagate());
  EXPECT_EQ(g.vm.render(a), "2");
}

TEST(Fd, MultDivisionGuard) {
  Fd f;
  Term x = f.var(0, 3), y = f.var(0, 9), z = f.var(1, 9);
  f.vm.post_mult(x, y, z);
  EXPECT_TRUE(f.vm.propagate());
  EXPECT_EQ(f.dom(y).max(), 9);  // no upper prune while x may be 0
  EXPECT_EQ(f.dom(y).min(), 1);  // ceil(1/3)
  EXPECT_EQ(f.dom(x).min(), 1);
}

TEST(Fd, DistinctRemovesDeterminedValues) {
  Fd f;
  Term x = f.var(3, 3), y = f.var(1, 3);
  f.vm.post_distinct({x, y});
  EXPECT_TRUE(f.vm.propagate());
  EXPECT_EQ(f.show(y), range(1, 2));
}

TEST(Fd, DistinctPigeonhole) {
  Fd f;
  Term x = f.var(1, 2), y = f.var(1, 2), z = f.var(1, 2);
  auto p = f.vm.post_distinct({x, y, z});
  EXPECT_EQ(f.vm.run_propagator(p), PropResult::Fail);
}

TEST(Fd, DistinctEntailedWhenAllDetermined) {
  Fd f;
  Term x = f.var(1, 1), y = f.var(2, 2), z = f.var(5, 5);
  auto p = f.vm.post_distinct({x, y, z});
  EXPECT_EQ(f.vm.run_propagator(p), PropResult::Entailed);
}

TEST(Fd, NoPropagatorsIsQuiescent) {
  Fd f;
  Term x = f.var(0, 4);
  EXPECT_TRUE(f.vm.propagate());
  EXPECT_EQ(f.show(x), range(0, 4));
}

TEST(Fd, TellDomFromPrograms) {
  auto log = kt::join(execute("declare X Y Z in X={FD.decl} X:::1#9 {Browse {FDSelectFF [X]}.2}\n"
                              "Y:::4#9 Y:::1#4 {Browse Y}\n"
                              "Z={FD.decl} Z=5 {Browse Z}",
                              {})
                          .log);
  EXPECT_EQ(log, "1 4 5");
  auto twice = execute("declare X in X={FD.decl} try {FDDecl X} catch E then {Browse E.kind} end", {});
  EXPECT_EQ(twice.log, std::vector<std::string>{"fd"});
  auto empty = execute("declare X in X:::1#3 try X:::5#9 catch E then {Browse failed} end", {});
  EXPECT_EQ(empty.log, std::vector<std::string>{"failed"});
}

TEST(Fd, FirstFailPicksSmallestThenFirstListed) {
  auto e = execute(
      "declare X Y Z A B in X:::1#3 Y:::1#2 Z:::1#9 A:::0#1 B:::5#6\n"
      "{Browse {FDSelectFF [X Y Z]}.1==Y}\n"
      "{Browse {FDSelectFF [A B]}.1==A}\n"
      "{Browse {FDSelectFF [1 2]}}",
      {});
  EXPECT_EQ(e.log, (std::vector<std::string>{"true", "true", "unit"}));
}

TEST(Fd, DistributeOnDeterminedVariablesMakesNoChoice) {
  auto e = execute("{Browse {Search.base.all proc {$ S} S=[1 2] S:::0#3 {FD.distribute ff S} end}}", {});
  EXPECT_EQ(e.log, std::vector<std::string>{"[[1 2]]"});
  EXPECT_EQ(e.stats.choose_events, 0);
}

// A propagator never removes a value with support in its own constraint,
// never grows a domain, and a fixpoint is stable under rerunning.
TEST(Fd, PropagatorsAreSoundContractingAndIdempotent) {
  std::mt19937 rng(99);
  for (int i = 0; i < 500; ++i) {
    auto m = kt::random_model(rng, 4, 6);
    auto bad = kt::propagator_violations(m);
    ASSERT_TRUE(bad.empty()) << m.all_program() << "\n" << kt::join(bad, "\n");
  }
}

TEST(Fd, SearchFindsExactlyTheBruteForceSolutions) {
  std::mt19937 rng(12345);
  for (int i = 0; i < 500; ++i) {
    auto m = kt::random_model(rng, 4, 6);
    bool dup = false;
    int exit = -1;
    auto got = kt::engine_solutions(m, &dup, &exit);
    ASSERT_EQ(exit, kExitOk) << m.all_program();
    ASSERT_FALSE(dup) << m.all_program();
    ASSERT_EQ(got, m.brute_force()) << m.all_program();
  }
}

TEST(Fd, FractionsMatchesPermutationOracle) {
  auto t0 = std::chrono::steady_clock::now();
  auto oracle = kt::fractions_oracle();
  auto oracle_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(oracle_s, 5.0);
  auto e = execute(kt::fractions_program(), {});
  ASSERT_EQ(e.exit, kExitOk);
  std::set<std::vector<std::int64_t>> got;
  for (const auto& line : e.log) {
    auto v = kt::ints_in(line);
    ASSERT_EQ(v.size(), 9u) << line;
    got.insert(v);
  }
  EXPECT_EQ(got.size(), e.log.size());
  EXPECT_EQ(got, oracle);
  EXPECT_LT(e.stats.spaces_created, 100'000);
}
