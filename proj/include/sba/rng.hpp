#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace sba {

/// SplitMix64 finalizer, used to derive independent substream seeds.
constexpr uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// Seeded random generator. All distribution code is implemented here rather
/// than with std:: distributions so that a given seed produces the same
/// stream on every standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), engine_(seed) {}

  uint64_t seed() const { return seed_; }

  /// Derives an independent generator; depends only on (seed, stream),
  /// not on how much of this stream has been consumed.
  Rng split(uint64_t stream) const {
    return Rng(mix64(seed_ + 0x9e3779b97f4a7c15ULL * (stream + 1)));
  }

  uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool next_bernoulli(double p) { return next_double() < p; }

  /// Uniform integer in [0, bound). bound must be > 0.
  uint32_t next_below(uint32_t bound) {
    const uint64_t b = bound;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % b;
    uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return static_cast<uint32_t>(x % b);
  }

  /// Standard normal via Box-Muller; second value of each pair is cached.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sba
