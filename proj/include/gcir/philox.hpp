#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
// Stateless: every draw is a pure function of (key, counter), so any path and
// step can be regenerated independently of how work is split across threads.

namespace gcir::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline Counter philox4x32_10(Counter ctr, Key key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

/// Uniform on the open interval (0, 1) from 64 random bits (53 used).
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Independent standard normal streams addressed by (seed, stream, index, tag).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  /// Two independent N(0,1) draws (Box-Muller) for the given address.
  std::array<double, 2> pair(std::uint64_t stream, std::uint32_t index, std::uint32_t tag = 0) const {
    const Counter c = philox4x32_10(
        {static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), index, tag}, key_);
    const double u1 = to_open_unit(c[0], c[1]);
    const double u2 = to_open_unit(c[2], c[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

  /// The k-th normal of a stream: pairs are shared by steps 2j and 2j + 1.
  double normal(std::uint64_t stream, std::uint64_t k, std::uint32_t tag = 0) const {
    return pair(stream, static_cast<std::uint32_t>(k >> 1), tag)[k & 1];
  }

 private:
  Key key_;
};

}  // namespace gcir::rng
