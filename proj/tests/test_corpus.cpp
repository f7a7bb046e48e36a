#include <gtest/gtest.h>

#include <filesystem>

#include "kernelspace/driver.hpp"
#include "support.hpp"

using namespace ks;

namespace {

const std::filesystem::path kRoot = std::filesystem::path(KS_SOURCE_DIR) / "corpus";

const std::vector<CorpusEntry>& corpus() {
  static const auto entries = load_corpus(kRoot);
  return entries;
}

const CorpusEntry& entry(const std::string& id) {
  for (const auto& e : corpus())
    if (e.id == id) return e;
  throw std::runtime_error("missing corpus entry " + id);
}

std::string test_name(const testing::TestParamInfo<std::size_t>& info) {
  std::string s = corpus()[info.param].id;
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  return s;
}

std::vector<std::size_t> indices() {
  std::vector<std::size_t> v(corpus().size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
  return v;
}

}  // namespace

class Golden : public testing::TestWithParam<std::size_t> {};

TEST_P(Golden, MatchesLogAndExitCode) {
  const auto& c = corpus()[GetParam()];
  auto e = execute(c.source, {});
  EXPECT_EQ(e.exit, c.expected_exit) << kt::join(e.diagnostics, "\n");
  EXPECT_EQ(e.log, c.golden) << unified_diff(c.golden, e.log, c.id + ".golden", "actual");
}

INSTANTIATE_TEST_SUITE_P(Corpus, Golden, testing::ValuesIn(indices()), test_name);

TEST(Corpus, ContainsTheRequiredPrograms) {
  for (const char* id :
       {"sec2/det_append", "sec2/det_nrev", "sec2/functional_nrev", "sec3/nondet_append", "sec3/search_object",
        "sec4/eager_sum", "sec4/lazy_sum", "sec5/display_stream", "sec6/children_fun", "sec6/children_rel",
        "sec6/children2", "sec6/fractions", "sec7/dfs_engine", "sec7/dis_commit"})
    EXPECT_NO_THROW(entry(id)) << id;
  for (const auto& c : corpus()) EXPECT_FALSE(c.tags.empty()) << c.id;
}

TEST(Corpus, SumsMatchClosedForm) {
  const std::int64_t n = 150000;
  std::string sum = std::to_string(n * (n - 1) / 2);
  EXPECT_EQ(entry("sec4/eager_sum").golden, std::vector<std::string>{sum});
  EXPECT_EQ(entry("sec4/lazy_sum").golden, std::vector<std::string>{sum});
  auto lazy = execute(entry("sec4/lazy_sum").source, {});
  EXPECT_EQ(lazy.log, std::vector<std::string>{sum});
  EXPECT_EQ(lazy.stats.trigger_installs, n + 1);
  EXPECT_EQ(lazy.stats.trigger_firings, n);
}

TEST(Corpus, ChildrenTwoFollowsClauseOrder) {
  std::vector<std::string> kids;
  for (const auto& [f, c] : kt::father_facts()) kids.push_back(c);
  EXPECT_EQ(entry("sec6/children2").golden, std::vector<std::string>{kt::render_list(kids)});
}

TEST(Corpus, FractionsGoldenIsTheOracleSet) {
  std::set<std::vector<std::int64_t>> golden;
  for (const auto& l : entry("sec6/fractions").golden) golden.insert(kt::ints_in(l));
  EXPECT_EQ(golden, kt::fractions_oracle());
}

TEST(Corpus, CorruptedGoldenProducesADiff) {
  const auto& c = entry("sec3/search_object");
  auto bad = c.golden;
  bad[2] = "[sol([9] [9])]";
  auto e = execute(c.source, {});
  ASSERT_NE(e.log, bad);
  auto d = unified_diff(bad, e.log, "expected", "actual");
  EXPECT_NE(d.find("--- expected"), std::string::npos) << d;
  EXPECT_NE(d.find("+++ actual"), std::string::npos) << d;
  EXPECT_NE(d.find("-[sol([9] [9])]"), std::string::npos) << d;
  EXPECT_NE(d.find("+" + c.golden[2]), std::string::npos) << d;
  EXPECT_TRUE(unified_diff(c.golden, e.log, "a", "b").empty());
}

TEST(Corpus, DeclarativeEntriesAreScheduleIndependent) {
  int checked = 0;
  for (const auto& c : corpus()) {
    bool declarative = true;
    for (const auto& t : c.tags)
      if (t == "state" || t == "search" || t == "fd") declarative = false;
    if (!declarative) continue;
    ++checked;
    for (std::int64_t slice : {1, 7, 1000})
      for (bool rev : {false, true}) {
        RunConfig cfg;
        cfg.slice = slice;
        cfg.reverse_queue = rev;
        EXPECT_EQ(execute(c.source, cfg).log, c.golden) << c.id << " slice " << slice << " rev " << rev;
      }
  }
  EXPECT_GE(checked, 8);
}
