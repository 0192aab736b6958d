#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "mrband/sample.hpp"

namespace mrband {

// All randomness flows through mt19937_64 plus the fixed bit mappings below,
// so identical seeds give identical draws on every platform.

inline std::uint64_t mix64(std::uint64_t z) {
  // splitmix64 finalizer
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class StreamPurpose : std::uint64_t { data = 0, epsilon = 1 };

//! Counter-based stream derivation: replication r of a study is reproducible
//! in isolation from (seed, r) without generating the streams before it.
inline std::mt19937_64 derive_stream(std::uint64_t seed, std::uint64_t rep,
                                     StreamPurpose purpose) {
  const std::uint64_t s =
      mix64(mix64(mix64(seed) ^ rep) ^ static_cast<std::uint64_t>(purpose));
  return std::mt19937_64{s};
}

//! Uniform draw on [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

//! Standard normal via Box-Muller; consumes exactly two uniforms per call.
inline double normal01(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1], keeps log finite
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

//! Realizes the perturbation vector. The zero kind consumes no randomness.
inline std::vector<double> draw_epsilons(const EpsilonSpec& spec,
                                         std::size_t n,
                                         std::mt19937_64& rng) {
  std::vector<double> eps(n, 0.0);
  if (spec.kind == EpsKind::uniform) {
    for (std::size_t i = 0; i < n; ++i)
      eps[i] = spec.kappa * (2.0 * uniform01(rng) - 1.0);
  }
  return eps;
}

}  // namespace mrband
