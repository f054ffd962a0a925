#include <algorithm>
#include <cmath>
#include <numbers>

#include "drq/envs/tasks.hpp"
#include "param_table.hpp"

namespace drq::envs {
namespace {

const detail::ParamTable<PendulumParams>& table() {
  static const detail::ParamTable<PendulumParams> t = {
      {"gravity", &PendulumParams::gravity},       {"length", &PendulumParams::length},
      {"mass", &PendulumParams::mass},             {"damping", &PendulumParams::damping},
      {"max_torque", &PendulumParams::max_torque}, {"max_speed", &PendulumParams::max_speed},
      {"iterations", &PendulumParams::iterations},
  };
  return t;
}

}  // namespace

PendulumState pendulum_substep(PendulumState s, double torque, double dt, const PendulumParams& p) {
  require(dt > 0.0, "physics dt must be positive");
  const int n = detail::iteration_count(p.iterations);
  const double h = dt / n;
  const double inertia = p.mass * p.length * p.length;
  for (int k = 0; k < n; ++k) {
    const double accel = (p.gravity / p.length) * std::sin(s.theta) + torque / inertia - p.damping * s.omega;
    s.omega = std::clamp(s.omega + h * accel, -p.max_speed, p.max_speed);
    s.theta += h * s.omega;
  }
  constexpr double pi = std::numbers::pi;
  if (s.theta > pi) s.theta -= 2 * pi;
  if (s.theta < -pi) s.theta += 2 * pi;
  return s;
}

double pendulum_energy(const PendulumState& s, const PendulumParams& p) {
  return 0.5 * p.mass * p.length * p.length * s.omega * s.omega + p.mass * p.gravity * p.length * std::cos(s.theta);
}

void PendulumTask::reset(Rng& rng) {
  state_.theta = uniform(rng, -std::numbers::pi, std::numbers::pi);
  state_.omega = 0.0;
}

void PendulumTask::substep(std::span<const double> action, double dt) {
  const double u = std::clamp(action[0], -1.0, 1.0) * params_.max_torque;
  state_ = pendulum_substep(state_, u, dt, params_);
}

double PendulumTask::reward() const { return std::clamp(0.5 * (1.0 + std::cos(state_.theta)), 0.0, 1.0); }

void PendulumTask::render(Canvas& canvas) const {
  const double s = static_cast<double>(canvas.size());
  const double cx = 0.5 * s, cy = 0.5 * s;
  const double rod = 0.38 * s;
  const double bx = cx + rod * std::sin(state_.theta);
  const double by = cy - rod * std::cos(state_.theta);
  canvas.fill({30, 30, 40});
  canvas.segment(cx, cy, bx, by, std::max(0.75, 0.04 * s), {230, 230, 230});
  canvas.circle(bx, by, std::max(1.5, 0.08 * s), {220, 60, 50});
  canvas.circle(cx, cy, std::max(1.0, 0.03 * s), {120, 120, 140});
}

void PendulumTask::set_state(std::span<const double> state) {
  require(state.size() == 2, "pendulum state has 2 entries (theta, omega)");
  state_ = {state[0], state[1]};
}

std::map<std::string, double> PendulumTask::params() const { return detail::read_params(params_, table()); }

void PendulumTask::set_param(const std::string& key, double value) {
  detail::write_param(params_, table(), "pendulum", key, value);
}

}  // namespace drq::envs
