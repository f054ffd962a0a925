#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace drq {

// All randomness flows through one engine type. The distribution helpers
// below are written out by hand so sequences are identical across standard
// library implementations and carry no hidden cached state (which matters
// when an engine is serialized into a checkpoint).
using Rng = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Uniform integer in [0, n). n must be positive.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

// Standard normal via Box-Muller; consumes exactly two engine outputs.
double standard_normal(Rng& rng);

// Deterministic seed derivation (splitmix64 over the mixed inputs).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0);

std::string serialize_rng(const Rng& rng);
Rng deserialize_rng(const std::string& state);

}  // namespace drq
