#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace dhd {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream: the value at a given counter depends only on
/// (seed, stream, counter), so any partition of a counter range across
/// workers reproduces the sequential draw exactly.
class CounterStream {
 public:
  constexpr CounterStream(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL))) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix64(key_ ^ mix64(counter * 0xA0761D6478BD642FULL));
  }

  /// Uniform in [0, 1).
  double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  /// Two independent standard normals (Box-Muller) from one counter.
  std::pair<double, double> normal_pair(std::uint64_t counter) const noexcept {
    const std::uint64_t a = bits(2 * counter);
    const std::uint64_t b = bits(2 * counter + 1);
    // u1 in (0, 1] keeps the logarithm finite.
    const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double phase = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(phase), radius * std::sin(phase)};
  }

 private:
  std::uint64_t key_;
};

}  // namespace dhd
