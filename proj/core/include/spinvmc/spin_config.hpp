#pragma once

#include <cstdint>
#include <vector>

#include "spinvmc/errors.hpp"

namespace spinvmc {

// Spin configuration with values in {+1, -1}, site order row-major over the
// lattice dims. Basis index convention (used by every exact enumeration):
// site 0 is the most significant bit and a set bit means spin -1, so index 0
// is all-up and counting follows {++..+, ++..-, ...}.
class SpinConfig {
 public:
  SpinConfig() = default;
  explicit SpinConfig(std::size_t n, std::int8_t fill = +1) : s_(n, fill) {}
  explicit SpinConfig(std::vector<std::int8_t> s) : s_(std::move(s)) {}

  static SpinConfig from_index(std::uint64_t idx, std::size_t n) {
    require(n <= 63, ErrorKind::size_cap, "basis index encoding supports n <= 63");
    SpinConfig c(n);
    for (std::size_t i = 0; i < n; ++i)
      c.s_[i] = (idx >> (n - 1 - i)) & 1 ? -1 : +1;
    return c;
  }

  std::uint64_t to_index() const {
    std::uint64_t idx = 0;
    const std::size_t n = s_.size();
    for (std::size_t i = 0; i < n; ++i)
      if (s_[i] < 0) idx |= std::uint64_t{1} << (n - 1 - i);
    return idx;
  }

  std::size_t size() const { return s_.size(); }
  std::int8_t operator[](std::size_t i) const { return s_[i]; }
  std::int8_t& operator[](std::size_t i) { return s_[i]; }
  void flip(std::size_t i) { s_[i] = static_cast<std::int8_t>(-s_[i]); }

  int total() const {
    int t = 0;
    for (auto v : s_) t += v;
    return t;
  }

  SpinConfig negated() const {
    SpinConfig c(*this);
    for (auto& v : c.s_) v = static_cast<std::int8_t>(-v);
    return c;
  }

  bool operator==(const SpinConfig&) const = default;
  const std::vector<std::int8_t>& data() const { return s_; }

 private:
  std::vector<std::int8_t> s_;
};

}  // namespace spinvmc
