#pragma once

#include <cmath>
#include <cstdint>

namespace traitlens::detail {

// Seed mixing and generation use fixed integer arithmetic so every stream is
// reproducible across platforms and standard-library versions.

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed and a tag.
inline uint64_t mix_seed(uint64_t seed, uint64_t tag) {
  uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL + (tag << 1));
  splitmix64(s);
  return splitmix64(s);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b) {
  return mix_seed(mix_seed(seed, a), b);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  return mix_seed(mix_seed(seed, a, b), c);
}

/// Small deterministic generator (splitmix64 stream).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). n must be > 0.
  uint64_t next_below(uint64_t n) {
    // Rejection-free modulo bias is negligible for our n << 2^64; use
    // multiply-shift for uniformity.
    return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  /// Standard normal via Box-Muller (avoids std::normal_distribution, whose
  /// output is implementation-defined).
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace traitlens::detail
