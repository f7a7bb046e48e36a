#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kernelspace/vm.hpp"

namespace ks {

enum ExitCode : int { kExitOk = 0, kExitUncaught = 1, kExitParse = 2, kExitBudget = 3, kExitDeadlock = 4 };

struct Execution {
  int exit = kExitOk;
  std::vector<std::string> log;
  std::vector<std::string> diagnostics;  // for the error stream
  Stats stats;
};

// Parses, desugars and runs a whole program in a fresh VM.
Execution execute(std::string_view source, const RunConfig& cfg, bool allow_deadlock = false);

// Maps the state of a VM after run() to an exit code and diagnostics.
int classify(VM& vm, RunStatus status, bool allow_deadlock, std::vector<std::string>& diagnostics);

struct CorpusEntry {
  std::string id;  // section/name
  std::filesystem::path path;
  std::string source;
  std::vector<std::string> golden;
  std::vector<std::string> tags;
  int expected_exit = kExitOk;
};

std::vector<CorpusEntry> load_corpus(const std::filesystem::path& root);
std::vector<std::string> read_lines(const std::filesystem::path& p);
std::string read_file(const std::filesystem::path& p);
// Empty when the logs agree.
std::string unified_diff(const std::vector<std::string>& expected, const std::vector<std::string>& actual,
                         const std::string& from, const std::string& to);

}  // namespace ks
