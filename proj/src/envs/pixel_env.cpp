#include "drq/envs/pixel_env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "drq/core/error.hpp"

namespace drq::envs {

void validate(const EnvConfig& c) {
  if (c.render_size < 8) throw ConfigError("env.render_size must be at least 8");
  if (c.frame_stack < 1) throw ConfigError("env.frame_stack must be at least 1");
  if (c.action_repeat < 1) throw ConfigError("env.action_repeat must be at least 1");
  if (c.episode_steps < c.action_repeat || c.episode_steps % c.action_repeat != 0) {
    throw ConfigError("env.episode_steps (" + std::to_string(c.episode_steps) +
                      ") must be a positive multiple of env.action_repeat (" + std::to_string(c.action_repeat) + ")");
  }
  if (!(c.dt > 0.0)) throw ConfigError("env.dt must be positive");
}

PixelControlEnv::PixelControlEnv(EnvConfig config, std::unique_ptr<Task> task)
    : config_(std::move(config)), task_(std::move(task)) {
  validate(config_);
  require(task_ != nullptr, "PixelControlEnv needs a task");
  for (const auto& [key, value] : config_.physics) task_->set_param(key, value);
  if (!config_.dump_frames_dir.empty()) std::filesystem::create_directories(config_.dump_frames_dir);
}

std::vector<std::uint8_t> PixelControlEnv::render() const {
  Canvas canvas(config_.render_size);
  task_->render(canvas);
  auto pixels = canvas.take();
  if (!config_.dump_frames_dir.empty()) {
    char name[64];
    std::snprintf(name, sizeof name, "ep%06llu_step%06zu.ppm", static_cast<unsigned long long>(episode_index_),
                  episode_env_steps_);
    write_ppm(config_.dump_frames_dir / name, pixels, config_.render_size, config_.render_size);
  }
  return pixels;
}

TimeStep PixelControlEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  task_->reset(rng_);
  if (active_ || episode_env_steps_ > 0) ++episode_index_;
  episode_env_steps_ = 0;
  active_ = true;
  frames_.clear();
  auto first = render();
  for (std::size_t k = 0; k < config_.frame_stack; ++k) frames_.push_back(first);
  return assemble(0.0, false);
}

TimeStep PixelControlEnv::step(std::span<const float> action) {
  require(active_, "step called on a finished episode; call reset first");
  require(action.size() == task_->action_dim(), "action has " + std::to_string(action.size()) +
                                                    " entries, task expects " + std::to_string(task_->action_dim()));
  std::vector<double> a(action.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double v = std::isfinite(action[i]) ? static_cast<double>(action[i]) : 0.0;
    a[i] = std::clamp(v, -1.0, 1.0);
  }
  double total = 0.0;
  for (std::size_t k = 0; k < config_.action_repeat; ++k) {
    task_->substep(a, config_.dt);
    total += task_->reward();
  }
  const double repeat = static_cast<double>(config_.action_repeat);
  const double reward = std::clamp(total, 0.0, repeat) / repeat;
  env_frames_ += config_.action_repeat;
  episode_env_steps_ += config_.action_repeat;
  const bool last = episode_env_steps_ >= config_.episode_steps;
  if (last) active_ = false;
  frames_.pop_front();
  frames_.push_back(render());
  return assemble(reward, last);
}

TimeStep PixelControlEnv::assemble(double reward, bool last) {
  TimeStep ts;
  ts.frame = frames_.back();
  ts.observation.reserve(config_.frame_stack * ts.frame.size());
  for (const auto& f : frames_) ts.observation.insert(ts.observation.end(), f.begin(), f.end());
  ts.reward = reward;
  ts.last = last;
  return ts;
}

}  // namespace drq::envs
