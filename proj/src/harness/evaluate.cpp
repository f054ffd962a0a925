#include "drq/harness/evaluate.hpp"

#include <memory>
#include <numeric>

#include "drq/core/error.hpp"
#include "drq/core/rng.hpp"

namespace drq::harness {

EvalResult evaluate(const Policy& policy, envs::Environment& env, std::size_t episodes, std::uint64_t seed) {
  require(episodes >= 1, "evaluate: need at least one episode");
  EvalResult result;
  for (std::size_t k = 0; k < episodes; ++k) {
    envs::TimeStep ts = env.reset(derive_seed(seed, 0xE7A1, k));
    double total = 0.0;
    while (!ts.last) {
      const auto action = policy(ts.observation);
      ts = env.step(action);
      total += ts.reward;
    }
    result.returns.push_back(total);
  }
  result.mean = std::accumulate(result.returns.begin(), result.returns.end(), 0.0) /
                static_cast<double>(result.returns.size());
  return result;
}

Policy random_policy(std::size_t action_dim, std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [rng, action_dim](std::span<const std::uint8_t>) {
    std::vector<float> a(action_dim);
    for (auto& x : a) x = static_cast<float>(uniform(*rng, -1.0, 1.0));
    return a;
  };
}

}  // namespace drq::harness
