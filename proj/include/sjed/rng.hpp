#pragma once

#include <cstdint>
#include <random>

#include "sjed/linalg.hpp"

namespace sjed {

/// Seeded random stream. Frames draw from independently derived sub-seeds
/// (see derive), so Monte Carlo results do not depend on scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double gauss() { return n01_(eng_); }

  /// CN(0, var): real and imaginary parts each N(0, var/2).
  cplx cgauss(double var) {
    const double s = std::sqrt(0.5 * var);
    return {s * gauss(), s * gauss()};
  }

  std::uint8_t bit() { return static_cast<std::uint8_t>(eng_() & 1u); }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }

  std::uint64_t integer() { return eng_(); }

  /// SplitMix64-based counter splitting: maps (seed, a, b, c) to a sub-seed.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t z = seed;
    z = mix(z ^ (0x9e3779b97f4a7c15ull + a));
    z = mix(z ^ (0xbf58476d1ce4e5b9ull + b));
    z = mix(z ^ (0x94d049bb133111ebull + c));
    return z;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 eng_;
  std::normal_distribution<double> n01_{0.0, 1.0};
};

}  // namespace sjed
