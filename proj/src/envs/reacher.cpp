#include <algorithm>
#include <cmath>

#include "drq/envs/tasks.hpp"
#include "param_table.hpp"

namespace drq::envs {
namespace {

const detail::ParamTable<ReacherParams>& table() {
  static const detail::ParamTable<ReacherParams> t = {
      {"arena", &ReacherParams::arena},           {"max_accel", &ReacherParams::max_accel},
      {"drag", &ReacherParams::drag},             {"max_speed", &ReacherParams::max_speed},
      {"goal_range", &ReacherParams::goal_range}, {"reward_scale", &ReacherParams::reward_scale},
      {"iterations", &ReacherParams::iterations},
  };
  return t;
}

void integrate_axis(double& pos, double& vel, double accel, double h, const ReacherParams& p) {
  vel = std::clamp(vel + h * (accel - p.drag * vel), -p.max_speed, p.max_speed);
  pos += h * vel;
  if (pos > p.arena || pos < -p.arena) {
    pos = std::clamp(pos, -p.arena, p.arena);
    vel = 0.0;
  }
}

}  // namespace

ReacherState reacher_substep(ReacherState s, double ax, double ay, double dt, const ReacherParams& p) {
  require(dt > 0.0, "physics dt must be positive");
  const int n = detail::iteration_count(p.iterations);
  const double h = dt / n;
  for (int k = 0; k < n; ++k) {
    integrate_axis(s.x, s.vx, ax, h, p);
    integrate_axis(s.y, s.vy, ay, h, p);
  }
  return s;
}

void ReacherTask::reset(Rng& rng) {
  const double g = params_.goal_range;
  state_ = {};
  state_.x = uniform(rng, -g, g);
  state_.y = uniform(rng, -g, g);
  state_.goal_x = uniform(rng, -g, g);
  state_.goal_y = uniform(rng, -g, g);
}

void ReacherTask::substep(std::span<const double> action, double dt) {
  const double ax = std::clamp(action[0], -1.0, 1.0) * params_.max_accel;
  const double ay = std::clamp(action[1], -1.0, 1.0) * params_.max_accel;
  state_ = reacher_substep(state_, ax, ay, dt, params_);
}

double ReacherTask::reward() const {
  const double d = std::hypot(state_.x - state_.goal_x, state_.y - state_.goal_y);
  return std::clamp(std::exp(-params_.reward_scale * d), 0.0, 1.0);
}

void ReacherTask::render(Canvas& canvas) const {
  const double s = static_cast<double>(canvas.size());
  const double scale = s / (2.2 * params_.arena);
  const auto px = [&](double v) { return 0.5 * s + v * scale; };
  // World y points up, image rows grow downward.
  const auto py = [&](double v) { return 0.5 * s - v * scale; };
  canvas.fill({20, 40, 60});
  canvas.rect(px(-params_.arena), py(params_.arena), px(params_.arena), py(-params_.arena), {40, 70, 90});
  canvas.circle(px(state_.goal_x), py(state_.goal_y), std::max(1.5, 0.1 * scale), {230, 80, 60});
  canvas.circle(px(state_.x), py(state_.y), std::max(1.5, 0.08 * scale), {90, 220, 120});
}

std::vector<double> ReacherTask::state() const {
  return {state_.x, state_.y, state_.vx, state_.vy, state_.goal_x, state_.goal_y};
}

void ReacherTask::set_state(std::span<const double> state) {
  require(state.size() == 6, "reacher state has 6 entries (x, y, vx, vy, goal_x, goal_y)");
  state_ = {state[0], state[1], state[2], state[3], state[4], state[5]};
}

std::map<std::string, double> ReacherTask::params() const { return detail::read_params(params_, table()); }

void ReacherTask::set_param(const std::string& key, double value) {
  detail::write_param(params_, table(), "reacher", key, value);
}

}  // namespace drq::envs
