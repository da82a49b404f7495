#pragma once

#include <cstdint>

namespace decay {

/// 64-bit linear congruential generator with Knuth's MMIX constants
/// (a = 6364136223846793005, c = 1442695040888963407).
///
/// Used for all randomized probe data so that runs are reproducible from the
/// config seed alone, byte-identical across platforms and independent of the
/// standard library's distribution implementations.
class Lcg64 {
 public:
  explicit Lcg64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return state_;
  }

  /// Uniform double in [0,1) with 53 significant bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  std::uint64_t state_;
};

}  // namespace decay
