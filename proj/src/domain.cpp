#include "kernelspace/domain.hpp"

#include <algorithm>

namespace ks::fd {

Domain Domain::range(std::int64_t lo, std::int64_t hi) {
  Domain d;
  lo = std::max<std::int64_t>(lo, 0);
  hi = std::min(hi, kSup);
  if (lo <= hi) d.ivs_.emplace_back(lo, hi);
  return d;
}

Domain Domain::from_values(std::vector<std::int64_t> values) {
  std::sort(values.begin(), values.end());
  Domain d;
  for (auto v : values) {
    if (v < 0 || v > kSup) continue;
    if (!d.ivs_.empty() && v <= d.ivs_.back().second + 1) {
      d.ivs_.back().second = std::max(d.ivs_.back().second, v);
    } else {
      d.ivs_.emplace_back(v, v);
    }
  }
  return d;
}

std::int64_t Domain::size() const {
  std::int64_t n = 0;
  for (auto [lo, hi] : ivs_) n += hi - lo + 1;
  return n;
}

bool Domain::contains(std::int64_t v) const {
  auto it = std::upper_bound(ivs_.begin(), ivs_.end(), v,
                             [](std::int64_t x, const auto& iv) { return x < iv.first; });
  if (it == ivs_.begin()) return false;
  --it;
  return v <= it->second;
}

Domain Domain::intersect(std::int64_t lo, std::int64_t hi) const {
  Domain d;
  for (auto [a, b] : ivs_) {
    auto l = std::max(a, lo);
    auto h = std::min(b, hi);
    if (l <= h) d.ivs_.emplace_back(l, h);
  }
  return d;
}

Domain Domain::intersect(const Domain& other) const {
  Domain d;
  std::size_t i = 0, j = 0;
  while (i < ivs_.size() && j < other.ivs_.size()) {
    auto l = std::max(ivs_[i].first, other.ivs_[j].first);
    auto h = std::min(ivs_[i].second, other.ivs_[j].second);
    if (l <= h) d.ivs_.emplace_back(l, h);
    if (ivs_[i].second < other.ivs_[j].second) ++i; else ++j;
  }
  return d;
}

Domain Domain::remove(std::int64_t v) const {
  Domain d;
  for (auto [a, b] : ivs_) {
    if (v < a || v > b) {
      d.ivs_.emplace_back(a, b);
      continue;
    }
    if (a <= v - 1) d.ivs_.emplace_back(a, v - 1);
    if (v + 1 <= b) d.ivs_.emplace_back(v + 1, b);
  }
  return d;
}

bool Domain::subset_of(const Domain& other) const { return intersect(other) == *this; }

std::vector<std::int64_t> Domain::values() const {
  std::vector<std::int64_t> out;
  for (auto [a, b] : ivs_)
    for (auto v = a; v <= b; ++v) out.push_back(v);
  return out;
}

std::string Domain::to_string() const {
  std::string s = "{";
  for (std::size_t i = 0; i < ivs_.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(ivs_[i].first);
    if (ivs_[i].second != ivs_[i].first) s += ".." + std::to_string(ivs_[i].second);
  }
  return s + "}";
}

}  // namespace ks::fd
