#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace incproc {

/// Engine used by all simulators.  The standard fixes its output sequence,
/// but std::uniform_*_distribution is implementation-defined, so variates are
/// derived from raw 64-bit draws below to keep trajectories portable.
using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Stream seed for replica `index` of a run with master seed `master`:
///   splitmix64(splitmix64(master) ^ splitmix64(index + 1)).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 1));
}

inline Engine make_engine(std::uint64_t seed) { return Engine{seed}; }

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n), n >= 1 (Lemire's multiply-shift with rejection).
inline std::uint64_t uniform_index(Engine& rng, std::uint64_t n) {
  std::uint64_t x = rng();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = rng();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Exponential variate with the given rate.
inline double exponential(Engine& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

}  // namespace incproc
