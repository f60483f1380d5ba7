#pragma once

#include <cstdint>
#include <random>

namespace collage {

/// Seeded random source with fully pinned draw semantics. std::mt19937_64 is
/// specified by the standard bit-for-bit, and every derived draw below is
/// implemented here rather than via unspecified <random> distributions, so a
/// seed reproduces identical streams on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Unbiased integer in [0, n), n >= 1 (Lemire multiply-reject).
  std::uint64_t uniform_index(std::uint64_t n) {
    using u128 = unsigned __int128;
    u128 m = static_cast<u128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        m = static_cast<u128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Seed for the index-th item of a parallel batch; keeps outputs independent
/// of worker scheduling.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return base ^ index;
}

}  // namespace collage
