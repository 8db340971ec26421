#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace odebayes {

/// Splittable counter-based 64-bit generator (SplitMix64 finalizer over a
/// keyed counter). Each (seed, stream) pair walks a distinct odd-gamma
/// counter sequence, so per-chain streams are reproducible and independent
/// of thread scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    state_ = mix(seed + 0x9e3779b97f4a7c15ULL);
    // Stream key maps to a distinct odd increment.
    gamma_ = mix(state_ ^ mix(stream + 0xbf58476d1ce4e5b9ULL)) | 1ULL;
  }

  std::uint64_t next_u64() {
    state_ += gamma_;
    return mix(state_);
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; safe to pass to log().
  double uniform_pos() { return 1.0 - uniform(); }

  /// Standard normal via Box-Muller, second value cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  /// Exponential(1).
  double exponential() { return -std::log(uniform_pos()); }

  /// Uniform integer on [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // Multiply-shift; bias is negligible for the small n used here.
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  }

  bool coin() { return (next_u64() >> 63) != 0; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_ = 0;
  std::uint64_t gamma_ = 1;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace odebayes
