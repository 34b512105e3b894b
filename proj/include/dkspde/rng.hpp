#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace dkspde::rng {

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
// A keyed bijection of a 128-bit counter: every (key, counter) pair yields an
// independent block, so streams are addressable without sequential state.

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr Counter philox_round(const Counter& c, const Key& k) {
  const std::uint64_t p0 = std::uint64_t(kPhiloxM0) * c[0];
  const std::uint64_t p1 = std::uint64_t(kPhiloxM1) * c[2];
  return {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1), std::uint32_t(p0 >> 32) ^ c[3] ^ k[1],
          std::uint32_t(p0)};
}

constexpr Counter philox4x32(Counter c, Key k) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k[0] += kPhiloxW0;
      k[1] += kPhiloxW1;
    }
    c = philox_round(c, k);
  }
  return c;
}

/// Uniform double in (0, 1) from two 32-bit words (53 significant bits).
inline double to_unit_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t(hi) << 21) ^ (std::uint64_t(lo) >> 11);
  return (double(bits & ((std::uint64_t(1) << 53) - 1)) + 0.5) * 0x1.0p-53;
}

/// Two independent standard normals for block (seed, stream, index, step).
inline std::array<double, 2> gaussian_pair(std::uint64_t seed, std::uint32_t stream, std::uint32_t index,
                                           std::uint64_t step) {
  const Key key{std::uint32_t(seed), std::uint32_t(seed >> 32)};
  const Counter ctr{std::uint32_t(step), std::uint32_t(step >> 32), index, stream};
  const Counter out = philox4x32(ctr, key);
  const double u1 = to_unit_open(out[0], out[1]);
  const double u2 = to_unit_open(out[2], out[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

/// Stream identifiers; the F and G noises never share a stream.
inline constexpr std::uint32_t kStreamF = 0x46u;
inline constexpr std::uint32_t kStreamG = 0x47u;

}  // namespace dkspde::rng
