#pragma once

#include <cmath>
#include <cstdint>

#include "detnewton/errors.hpp"

namespace detnewton {

/// Portable counter-based random stream.
///
/// The state walks an odd increment derived from the stream id and the
/// output is a finalizing 64-bit hash of the state (splitmix64), so the
/// sequence is a pure function of (seed, stream) built from integer ops
/// only: identical draws on every platform. Distinct stream ids give
/// statistically independent sequences and may be consumed concurrently.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : state_(mix(seed)), increment_(mix(stream ^ 0x9e3779b97f4a7c15ULL) | 1ULL) {}

  std::uint64_t next_u64() {
    state_ += increment_;
    return mix(state_);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Unbiased uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw ContractViolation("RngStream::next_below: n must be positive");
    const std::uint64_t threshold = (0ULL - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  /// Standard normal via Box-Muller (pairs cached).
  double next_gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  std::uint64_t increment_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace detnewton
