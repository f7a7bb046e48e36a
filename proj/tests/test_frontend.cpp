#include <gtest/gtest.h>

#include "kernelspace/desugar.hpp"
#include "kernelspace/kernel.hpp"
#include "kernelspace/surface.hpp"

using namespace ks;

namespace {

StmtPtr kernel_of(std::string_view src) { return desugar(parse(src)); }

const char* const kPrograms[] = {
    "local X Y in X=1 Y=X end",
    "proc {Append Xs Ys Zs} case Xs of nil then Zs=Ys [] X|Xr then Zr in Zs=X|Zr {Append Xr Ys Zr} end end",
    "fun {NRev Xs} case Xs of nil then nil [] X|Xr then {Append {NRev Xr} [X]} end end",
    "local X in if X<3 then {Browse a} elseif X==4 then skip else {Browse b} end end",
    "local X in thread X=f(a:1 b:[1 2]) end {Browse X.a} end",
    "local X in try raise err(X) end catch E then {Browse E} end end",
    "proc {P X} choice X=1 [] X=2 [] X=3 end end",
    "proc {Q X} dis X=a then skip [] X=b then {Browse X} end end",
    "fun lazy {Gen N} N|{Gen N+1} end",
    "proc {M S} A B in S=[A B] S:::1#9 A+2*B=:7 A*B=:B {FD.distribute ff S} end",
    "local X Y in case X#Y of f(A)#g(B) then skip [] _ then skip end end",
};

}  // namespace

TEST(Frontend, ParsesAppendWithCaseAndLocals) {
  auto nodes = parse("declare proc {Append Xs Ys Zs} case Xs of nil then Zs=Ys [] X|Xr then Zr in "
                     "Zs=X|Zr {Append Xr Ys Zr} end end");
  EXPECT_FALSE(nodes.empty());
}

TEST(Frontend, PrettyKernelRoundTrips) {
  for (const char* src : kPrograms) {
    SCOPED_TRACE(src);
    auto k = kernel_of(std::string("declare Append Browse FD in ") + src);
    std::string text = pretty(*k);
    StmtPtr again;
    ASSERT_NO_THROW(again = kernel_of(text)) << text;
    EXPECT_TRUE(alpha_equivalent(*k, *again)) << text << "\n---\n" << pretty(*again);
  }
}

TEST(Frontend, KernelHasNoSurfaceSugar) {
  auto k = kernel_of("declare Append in fun {Append Xs Ys} case Xs of nil then Ys [] X|Xr then X|{Append Xr Ys} end end");
  std::string text = pretty(*k);
  EXPECT_EQ(text.find("fun"), std::string::npos);
  EXPECT_NE(text.find("proc"), std::string::npos);
}

TEST(Frontend, FreeIdentifiers) {
  auto k = kernel_of("declare Y in local X in X=Y {Foo X} end");
  auto free = free_identifiers(*k);
  EXPECT_EQ(free.count("Foo"), 1u);
  EXPECT_EQ(free.count("X"), 0u);
}

TEST(Frontend, SyntaxErrorsCarryLocations) {
  try {
    parse("local X in X = end");
    FAIL() << "expected a syntax error";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.loc.line, 1);
  }
  EXPECT_THROW(parse("choice skip [] skip else skip end"), SyntaxError);
  EXPECT_THROW(parse("class C end"), SyntaxError);
}

TEST(Frontend, UnboundIdentifierIsCompileError) {
  GlobalScope g;
  EXPECT_THROW(compile("{Undefined 1}", g), CompileError);
}

TEST(Frontend, FailedCompileLeavesScopeUntouched) {
  GlobalScope g;
  g.declare("Browse");
  EXPECT_THROW(compile("declare Z in {Nope Z}", g), CompileError);
  EXPECT_EQ(g.index.count("Z"), 0u);
  EXPECT_NO_THROW(compile("declare Z in {Browse Z}", g));
  EXPECT_EQ(g.index.count("Z"), 1u);
}

TEST(Frontend, NestedDollarIsRejectedOutsideExpressions) {
  GlobalScope g;
  g.declare("P");
  EXPECT_THROW(compile("{P $}", g), CompileError);
}
