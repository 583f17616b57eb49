#pragma once

#include <cstdint>
#include <cmath>

namespace ladderflux {

// Counter-based splittable random stream. Each (seed, k, r) triple names an
// independent stream; the state walks a fixed additive counter and every
// output is a pure mix of it (splitmix64), so streams can be created in any
// order and always replay bit-exactly on any platform.
class SplitStream {
 public:
  explicit SplitStream(std::uint64_t seed, std::uint64_t k = 0, std::uint64_t r = 0) {
    // Absorb the three key words through the output mix so nearby keys
    // (seed, k, r+1) land in unrelated parts of the counter space.
    state_ = mix(seed + kGamma);
    state_ = mix(state_ ^ mix(k + 2 * kGamma));
    state_ = mix(state_ ^ mix(r + 3 * kGamma));
    have_spare_ = false;
  }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }

  // Uniform double in the open interval (0, 1): 53-bit mantissa, half-step
  // offset keeps 0 and 1 unreachable (safe for log()).
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  // Uniform integer in [0, bound). Rejection on the top slice keeps it
  // unbiased; the loop is deterministic given the stream position.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % bound;
  }

  // Standard normal via Box-Muller; the second deviate of each pair is cached.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double m = std::sqrt(-2.0 * std::log(u1));
    spare_ = m * std::sin(kTwoPi_ * u2);
    have_spare_ = true;
    return m * std::cos(kTwoPi_ * u2);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;
  static constexpr double kTwoPi_ = 6.283185307179586476925;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ladderflux
