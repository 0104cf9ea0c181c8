#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

namespace servokit {

/**
 * Deterministic 64-bit shift-register generator with splittable seeding.
 *
 * The algorithm is fixed so that shuffles, splits and folds are
 * byte-identical across platforms and can be reproduced in any language:
 *
 *   mix64(x): the splitmix64 finalizer
 *     x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9
 *     x = (x ^ (x >> 27)) * 0x94D049BB133111EB
 *     return x ^ (x >> 31)
 *
 *   state0   = mix64(seed + 0x9E3779B97F4A7C15), or 0x9E3779B97F4A7C15 if zero
 *   next():    xorshift64* step
 *     s ^= s >> 12; s ^= s << 25; s ^= s >> 27; return s * 0x2545F4914F6CDD1D
 *   below(n):  next() % n
 *   uniform(): (next() >> 11) * 2^-53
 *   split(k):  child generator seeded with mix64(seed + (k + 1) * 0x9E3779B97F4A7C15)
 *   shuffle:   Fisher-Yates, i from n-1 down to 1, j = below(i + 1)
 */
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : seed_(seed) {
    state_ = mix64(seed + kGolden);
    if (state_ == 0) state_ = kGolden;
  }

  /// Child generator on an independent, reproducible stream.
  SplitRng split(std::uint64_t stream) const {
    return SplitRng(mix64(seed_ + (stream + 1) * kGolden));
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  /// Uniform integer in [0, n). n must be nonzero.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller on two uniform draws.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  static std::uint64_t mix64(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace servokit
