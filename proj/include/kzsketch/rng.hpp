#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace kz {

// PCG32 (XSH-RR output, 64-bit LCG state), seeded the same way as the
// reference pcg32_srandom_r so streams can be replayed from other languages.
class Pcg32 {
 public:
  explicit Pcg32(std::uint64_t seed, std::uint64_t seq = 0x5851f42d4c957f2dULL) {
    state_ = 0;
    inc_ = (seq << 1u) | 1u;
    step();
    state_ += seed;
    step();
  }

  std::uint32_t next_u32() {
    std::uint64_t old = state_;
    step();
    auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  std::uint64_t next_u64() {
    std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Box-Muller; the second variate is discarded so the stream position
  // depends only on the number of calls.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  void step() { state_ = state_ * 6364136223846793005ULL + inc_; }

  std::uint64_t state_;
  std::uint64_t inc_;
};

// Inverse-CDF lookup over an inclusive prefix-sum table. Returns the first
// index whose prefix exceeds u * total.
inline std::size_t sample_prefix(std::span<const double> prefix, double u) {
  const double target = u * prefix.back();
  std::size_t lo = 0, hi = prefix.size() - 1;
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (prefix[mid] > target) hi = mid;
    else lo = mid + 1;
  }
  return lo;
}

}  // namespace kz
