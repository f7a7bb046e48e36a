#include "kernelspace/driver.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "kernelspace/surface.hpp"

namespace ks {

int classify(VM& vm, RunStatus status, bool allow_deadlock, std::vector<std::string>& diagnostics) {
  auto uncaught = vm.take_uncaught();
  for (const auto& u : uncaught) diagnostics.push_back("uncaught exception: " + u);
  if (!uncaught.empty()) return kExitUncaught;
  if (status == RunStatus::Budget) {
    diagnostics.push_back("reduction budget exhausted after " + std::to_string(vm.stats().reductions) +
                          " reductions");
    return kExitBudget;
  }
  if (status == RunStatus::Quiescent && !allow_deadlock) {
    auto blocked = vm.blocked();
    diagnostics.push_back("deadlock: " + std::to_string(blocked.size()) + " suspended thread(s)");
    for (const auto& b : blocked) diagnostics.push_back("  " + b);
    return kExitDeadlock;
  }
  return kExitOk;
}

Execution execute(std::string_view source, const RunConfig& cfg, bool allow_deadlock) {
  Execution e;
  try {
    VM vm(cfg);
    vm.load(source);
    auto status = vm.run();
    e.log = vm.take_log();
    e.exit = classify(vm, status, allow_deadlock, e.diagnostics);
    e.stats = vm.stats();
  } catch (const SyntaxError& err) {
    e.exit = kExitParse;
    e.diagnostics.push_back(std::string("syntax error: ") + err.what());
  } catch (const CompileError& err) {
    e.exit = kExitParse;
    e.diagnostics.push_back(std::string("error: ") + err.what());
  }
  return e;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

namespace {

void parse_header(CorpusEntry& e) {
  std::istringstream in(e.source);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind('%', 0) != 0) break;
    std::istringstream ls(line.substr(1));
    std::string key;
    ls >> key;
    if (key == "tags:") {
      std::string t;
      while (ls >> t) e.tags.push_back(t);
    } else if (key == "exit:") {
      ls >> e.expected_exit;
    }
  }
}

}  // namespace

std::vector<CorpusEntry> load_corpus(const std::filesystem::path& root) {
  std::vector<CorpusEntry> out;
  if (!std::filesystem::is_directory(root)) return out;
  for (const auto& f : std::filesystem::recursive_directory_iterator(root)) {
    if (!f.is_regular_file() || f.path().extension() != ".oz") continue;
    CorpusEntry e;
    e.path = f.path();
    e.id = std::filesystem::relative(f.path(), root).replace_extension().generic_string();
    e.source = read_file(f.path());
    auto golden = f.path();
    golden.replace_extension(".golden");
    if (std::filesystem::exists(golden)) e.golden = read_lines(golden);
    parse_header(e);
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::string unified_diff(const std::vector<std::string>& expected, const std::vector<std::string>& actual,
                         const std::string& from, const std::string& to) {
  if (expected == actual) return {};
  // Longest common subsequence table; corpus logs are short.
  std::size_t n = expected.size(), m = actual.size();
  std::vector<std::vector<std::size_t>> lcs(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = m; j-- > 0;)
      lcs[i][j] = expected[i] == actual[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
  std::ostringstream out;
  out << "--- " << from << "\n+++ " << to << "\n@@ -1," << n << " +1," << m << " @@\n";
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && expected[i] == actual[j]) {
      out << ' ' << expected[i++] << '\n';
      ++j;
    } else if (j < m && (i == n || lcs[i][j + 1] >= lcs[i + 1][j])) {
      out << '+' << actual[j++] << '\n';
    } else {
      out << '-' << expected[i++] << '\n';
    }
  }
  return out.str();
}

}  // namespace ks
