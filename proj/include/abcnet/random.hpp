#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace abcnet {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Random stream for simulation `run_index` of a round seeded with `master_seed`.
/// The engine is seeded with mix64(mix64(master_seed) + run_index), so any
/// single run can be reproduced without replaying the others, and nearby
/// master seeds do not share runs.
inline Rng stream_for_run(std::uint64_t master_seed, std::uint64_t run_index) {
  return Rng(mix64(mix64(master_seed) + run_index));
}

/// Uniform draw on [0, 1) from the top 53 bits of one engine output.
/// Unlike std::uniform_real_distribution this is fixed by the engine alone,
/// so streams reproduce across standard library implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform index in [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const auto wide = static_cast<unsigned __int128>(rng()) * n;
  return static_cast<std::size_t>(wide >> 64);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace abcnet
