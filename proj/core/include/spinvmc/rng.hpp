#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace spinvmc {

// Deterministic random stream. mt19937_64 is fully pinned by the standard and
// the derived draws below avoid library distributions, whose output is
// implementation defined, so identical seeds reproduce identical streams on
// any platform. Stream splitting rule: engine seeded from
// seed_seq{lo32(seed), hi32(seed), lo32(stream), hi32(stream)}.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    eng_.seed(seq);
  }

  // [0, 1) with 53 random bits
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // standard normal via Box-Muller; always consumes exactly two uniforms
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 == 0.0) u1 = uniform();  // log(0) guard, astronomically rare
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // [0, bound) by 128-bit multiply-shift (bias < 2^-64, bound well below 2^32 here)
  std::uint64_t uniform_int(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(eng_()) * bound) >> 64);
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace spinvmc
