#pragma once

// Portable, seedable randomness. Distributions are implemented here rather
// than through <random> distributions so that streams are bit-identical
// across standard libraries.

#include <cmath>
#include <cstdint>
#include <random>

#include "ellipose/geometry.hpp"

namespace ellipose {

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(SplitMix64(seed)) {}

  // Independent stream for item `index` of a run seeded with `seed`.
  static Rng Stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(SplitMix64(seed) ^ SplitMix64(index + 0x51ed27ULL));
  }

  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  std::uint64_t Index(std::uint64_t n) { return engine_() % n; }

  double Normal() {
    // Box-Muller; the second variate is discarded to keep streams simple.
    const double u1 = 1.0 - Uniform();
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  Vector3d UnitVector() {
    const double z = Uniform(-1.0, 1.0);
    const double phi = Uniform(0.0, 2.0 * kPi);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ellipose
