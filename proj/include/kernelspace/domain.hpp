#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ks::fd {

// Largest value a finite domain may contain.
inline constexpr std::int64_t kSup = 134'217'726;

// A finite set of non-negative integers stored as sorted, disjoint,
// non-adjacent closed intervals.
class Domain {
 public:
  Domain() = default;

  static Domain range(std::int64_t lo, std::int64_t hi);
  static Domain full() { return range(0, kSup); }
  static Domain singleton(std::int64_t v) { return range(v, v); }
  static Domain from_values(std::vector<std::int64_t> values);

  bool empty() const { return ivs_.empty(); }
  std::int64_t size() const;
  std::int64_t min() const { return ivs_.front().first; }
  std::int64_t max() const { return ivs_.back().second; }
  bool is_singleton() const { return ivs_.size() == 1 && ivs_[0].first == ivs_[0].second; }
  bool contains(std::int64_t v) const;

  Domain intersect(std::int64_t lo, std::int64_t hi) const;
  Domain intersect(const Domain& other) const;
  Domain remove(std::int64_t v) const;
  bool subset_of(const Domain& other) const;

  std::vector<std::int64_t> values() const;
  const std::vector<std::pair<std::int64_t, std::int64_t>>& intervals() const { return ivs_; }

  // "{1..3 5 7..9}" style rendering.
  std::string to_string() const;

  friend bool operator==(const Domain&, const Domain&) = default;

 private:
  std::vector<std::pair<std::int64_t, std::int64_t>> ivs_;
};

}  // namespace ks::fd
