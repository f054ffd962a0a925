#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "drq/core/rng.hpp"
#include "drq/envs/raster.hpp"

namespace drq::envs {

// Physics and drawing for one control problem. Actions arrive in [-1, 1]
// and are scaled to physical units by the task.
class Task {
 public:
  virtual ~Task() = default;

  virtual std::string name() const = 0;
  virtual std::size_t action_dim() const = 0;
  // Draws the initial state from the task's documented distribution.
  virtual void reset(Rng& rng) = 0;
  // Advances the state by dt seconds under a fixed action.
  virtual void substep(std::span<const double> action, double dt) = 0;
  // Reward of the current state, in [0, 1].
  virtual double reward() const = 0;
  virtual void render(Canvas& canvas) const = 0;

  // Flat state vector (diagnostic channel; never fed to the agent).
  virtual std::vector<double> state() const = 0;
  virtual void set_state(std::span<const double> state) = 0;

  // Physical constants by name, overridable from the run config.
  virtual std::map<std::string, double> params() const = 0;
  virtual void set_param(const std::string& key, double value) = 0;

  virtual std::unique_ptr<Task> clone() const = 0;
};

}  // namespace drq::envs
