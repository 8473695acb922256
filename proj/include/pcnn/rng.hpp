#pragma once

#include <cmath>
#include <cstdint>

namespace pcnn {

/// Deterministic 64-bit generator (splitmix64, Steele et al.). The output
/// sequence for a given seed is part of the library's compatibility
/// contract: shuffles, weight initialization and the synthetic corpus all
/// reproduce bit-exactly across platforms and releases.
class Rng {
public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi). Guards against rounding up to hi.
  double next_uniform(double lo, double hi) {
    double v = lo + (hi - lo) * next_double();
    if (v >= hi) v = std::nextafter(hi, lo);
    return v;
  }

  /// Uniform integer in [0, n). n must be nonzero.
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

private:
  uint64_t state_;
};

}  // namespace pcnn
