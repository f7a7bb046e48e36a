#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "kernelspace/driver.hpp"
#include "kernelspace/surface.hpp"

namespace {

struct Flags {
  std::int64_t slice = 1000;
  std::int64_t max_red = 200'000'000;
  bool trace = false;
  bool reverse = false;
  bool no_deadlock = false;
  std::vector<std::string> tags;
  std::string dir = "corpus";
};

ks::RunConfig config(const Flags& f) {
  ks::RunConfig cfg;
  cfg.slice = f.slice;
  cfg.max_reductions = f.max_red;
  cfg.reverse_queue = f.reverse;
  if (f.trace) cfg.trace = [](const std::string& line) { std::cerr << line << '\n'; };
  return cfg;
}

int cmd_run(const std::string& path, const Flags& f) {
  std::string source;
  try {
    source = ks::read_file(path);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return ks::kExitParse;
  }
  auto e = ks::execute(source, config(f), f.no_deadlock);
  for (const auto& l : e.log) std::cout << l << '\n';
  std::cout.flush();
  for (const auto& d : e.diagnostics) std::cerr << d << '\n';
  return e.exit;
}

bool incomplete(const ks::SyntaxError& e) { return std::string(e.what()).find("end of input") != std::string::npos; }

int cmd_repl(const Flags& f) {
  ks::VM vm(config(f));
  std::string buffer, line;
  auto prompt = [&] { std::cerr << (buffer.empty() ? "oz> " : "... ") << std::flush; };
  prompt();
  while (std::getline(std::cin, line)) {
    if (!line.empty()) buffer += line + '\n';
    if (buffer.find_first_not_of(" \t\n") == std::string::npos) {
      buffer.clear();
      prompt();
      continue;
    }
    try {
      vm.load(buffer);
    } catch (const ks::SyntaxError& e) {
      if (incomplete(e) && !line.empty()) {
        prompt();
        continue;
      }
      std::cerr << "syntax error: " << e.what() << '\n';
      buffer.clear();
      prompt();
      continue;
    } catch (const ks::CompileError& e) {
      std::cerr << "error: " << e.what() << '\n';
      buffer.clear();
      prompt();
      continue;
    }
    buffer.clear();
    auto status = vm.run();
    for (const auto& l : vm.take_log()) std::cout << l << '\n';
    std::cout.flush();
    for (const auto& u : vm.take_uncaught()) std::cerr << "uncaught exception: " << u << '\n';
    if (status == ks::RunStatus::Budget) std::cerr << "reduction budget exhausted\n";
    auto blocked = vm.blocked();
    if (!blocked.empty())
      std::cerr << "blocked: " << blocked.size() << (blocked.size() == 1 ? " thread\n" : " threads\n");
    prompt();
  }
  return 0;
}

int cmd_corpus(const Flags& f) {
  auto entries = ks::load_corpus(f.dir);
  if (entries.empty()) {
    std::cerr << "no corpus entries under " << f.dir << '\n';
    return 1;
  }
  int failed = 0, ran = 0;
  for (const auto& e : entries) {
    if (!f.tags.empty()) {
      bool hit = false;
      for (const auto& t : f.tags)
        if (std::find(e.tags.begin(), e.tags.end(), t) != e.tags.end()) hit = true;
      if (!hit) continue;
    }
    ++ran;
    auto r = ks::execute(e.source, config(f), f.no_deadlock);
    bool ok = r.log == e.golden && r.exit == e.expected_exit;
    std::cout << (ok ? "PASS " : "FAIL ") << e.id << '\n';
    if (!ok) {
      ++failed;
      if (r.exit != e.expected_exit)
        std::cout << "  exit " << r.exit << ", expected " << e.expected_exit << '\n';
      if (r.log != e.golden) std::cout << ks::unified_diff(e.golden, r.log, e.id + ".golden", e.id + " (actual)");
      for (const auto& d : r.diagnostics) std::cerr << "  " << d << '\n';
    }
  }
  std::cout << ran - failed << "/" << ran << " passed\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernelspace: an interpreter for a concurrent constraint kernel language"};
  app.require_subcommand(1);
  Flags f;
  auto add_flags = [&](CLI::App* c) {
    c->add_option("--slice", f.slice, "reductions per time slice")->check(CLI::PositiveNumber);
    c->add_option("--max-red", f.max_red, "total reduction budget")->check(CLI::PositiveNumber);
    c->add_flag("--trace", f.trace, "print scheduler events to stderr");
    c->add_flag("--reverse-queue", f.reverse, "insert woken threads at the front of the run queue");
    c->add_flag("--no-deadlock", f.no_deadlock, "treat quiescence with suspended threads as success");
  };
  std::string path;
  auto* run = app.add_subcommand("run", "run a program file");
  run->add_option("file", path, "program to run")->required();
  add_flags(run);
  auto* repl = app.add_subcommand("repl", "interactive session");
  add_flags(repl);
  auto* corpus = app.add_subcommand("corpus", "run the corpus against its golden logs");
  add_flags(corpus);
  corpus->add_option("--tag", f.tags, "only run entries with this tag");
  corpus->add_option("--dir", f.dir, "corpus directory");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : ks::kExitParse;
  }
  if (f.max_red < f.slice) f.max_red = f.slice;
  if (*run) return cmd_run(path, f);
  if (*repl) return cmd_repl(f);
  return cmd_corpus(f);
}
