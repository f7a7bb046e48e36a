#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kernelspace/kernel.hpp"
#include "kernelspace/surface.hpp"

namespace ks {

class CompileError : public std::runtime_error {
 public:
  CompileError(const std::string& msg, Loc loc)
      : std::runtime_error(std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": " + msg), loc(loc) {}
  Loc loc;
};

// Names visible to every program: built-ins, prelude definitions and
// anything introduced by `declare`. Redeclaring a name allocates a new slot.
struct GlobalScope {
  std::unordered_map<std::string, int> index;
  int count = 0;
  int declare(const std::string& name) {
    index[name] = count;
    return count++;
  }
};

struct Program {
  StmtPtr body;
  int frame_size = 0;
  std::vector<int> new_globals;
};

// Surface to kernel. `declared` receives the names introduced by `declare`.
StmtPtr desugar(const std::vector<NodePtr>& program, std::vector<std::string>* declared = nullptr);

// Assigns frame slots, closure captures and global indices in place.
// Returns the frame size of the outermost statement.
int resolve(Stmt& s, const GlobalScope& globals);

Program compile(std::string_view source, GlobalScope& globals);

}  // namespace ks
