#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "drq/envs/environment.hpp"

namespace drq::harness {

using Policy = std::function<std::vector<float>(std::span<const std::uint8_t> observation)>;

struct EvalResult {
  std::vector<double> returns;
  double mean = 0.0;
};

// Runs `episodes` full episodes; episode k resets with derive_seed(seed, k).
// Returns are sums of per-actor-step rewards.
EvalResult evaluate(const Policy& policy, envs::Environment& env, std::size_t episodes, std::uint64_t seed);

// Uniform-random actions in [-1, 1]^A drawn from its own generator.
Policy random_policy(std::size_t action_dim, std::uint64_t seed);

}  // namespace drq::harness
