#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tapspin {

using Rng = std::mt19937_64;

// Purposes for which a cell draws randomness. Values are part of the
// reproducibility contract: never renumber, only append.
enum class Stream : std::uint64_t {
  haar = 1,
  field_sample = 2,
  amp_init = 3,
  mcmc = 4,
  conditional_haar = 5,
  state_evolution = 6,
  tap_init = 7,
};

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based seed derivation: (seed, cell key, stream tag) -> 64-bit seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t cell, Stream tag);
std::uint64_t derive_seed(std::uint64_t seed, Stream tag);

// Stable 64-bit hash of a byte string (FNV-1a), used for cell keys.
std::uint64_t fnv1a(std::string_view bytes);

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace tapspin
