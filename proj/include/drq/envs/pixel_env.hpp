#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "drq/envs/environment.hpp"
#include "drq/envs/task.hpp"

namespace drq::envs {

struct EnvConfig {
  std::string task = "pendulum";
  std::size_t render_size = 84;
  std::size_t frame_stack = 3;
  std::size_t action_repeat = 2;
  std::size_t episode_steps = 1000;
  double dt = 0.02;
  std::map<std::string, double> physics;
  // When set, every rendered frame is written there as PPM.
  std::filesystem::path dump_frames_dir;
};

void validate(const EnvConfig& config);

// Frame stacking, action repeat and the step budget around a Task.
class PixelControlEnv final : public Environment {
 public:
  PixelControlEnv(EnvConfig config, std::unique_ptr<Task> task);

  TimeStep reset(std::uint64_t seed) override;
  TimeStep step(std::span<const float> action) override;

  std::size_t action_dim() const override { return task_->action_dim(); }
  replay::FrameSpec frame_spec() const override { return {3, config_.render_size, config_.render_size}; }
  std::size_t frame_stack() const override { return config_.frame_stack; }
  std::size_t action_repeat() const override { return config_.action_repeat; }
  std::size_t episode_steps() const override { return config_.episode_steps; }
  std::uint64_t env_frames() const override { return env_frames_; }

  const EnvConfig& config() const { return config_; }
  Task& task() { return *task_; }
  const Task& task() const { return *task_; }
  std::size_t episode_env_steps() const { return episode_env_steps_; }
  bool active() const { return active_; }
  std::vector<std::uint8_t> render() const;

 private:
  TimeStep assemble(double reward, bool last);

  EnvConfig config_;
  std::unique_ptr<Task> task_;
  Rng rng_;
  std::deque<std::vector<std::uint8_t>> frames_;
  std::uint64_t env_frames_ = 0;
  std::size_t episode_env_steps_ = 0;
  std::uint64_t episode_index_ = 0;
  bool active_ = false;
};

}  // namespace drq::envs
