#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "drq/replay/replay_buffer.hpp"

namespace drq::envs {

struct TimeStep {
  std::vector<std::uint8_t> frame;        // newest single frame, planar RGB
  std::vector<std::uint8_t> observation;  // frame_stack frames, oldest first
  double reward = 0.0;                    // per actor step, in [0, 1]
  bool last = false;                      // step budget exhausted
};

// Pixel-observation episodic environment seen by the agent and harness.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual TimeStep reset(std::uint64_t seed) = 0;
  virtual TimeStep step(std::span<const float> action) = 0;

  virtual std::size_t action_dim() const = 0;
  virtual replay::FrameSpec frame_spec() const = 0;
  virtual std::size_t frame_stack() const = 0;
  virtual std::size_t action_repeat() const = 0;
  // Environment steps per episode.
  virtual std::size_t episode_steps() const = 0;
  // Environment steps taken since construction.
  virtual std::uint64_t env_frames() const = 0;
};

}  // namespace drq::envs
