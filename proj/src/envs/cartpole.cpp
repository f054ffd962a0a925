#include <algorithm>
#include <cmath>
#include <numbers>

#include "drq/envs/tasks.hpp"
#include "param_table.hpp"

namespace drq::envs {
namespace {

const detail::ParamTable<CartpoleParams>& table() {
  static const detail::ParamTable<CartpoleParams> t = {
      {"gravity", &CartpoleParams::gravity},
      {"cart_mass", &CartpoleParams::cart_mass},
      {"pole_mass", &CartpoleParams::pole_mass},
      {"half_length", &CartpoleParams::half_length},
      {"cart_friction", &CartpoleParams::cart_friction},
      {"max_force", &CartpoleParams::max_force},
      {"track_limit", &CartpoleParams::track_limit},
      {"max_cart_speed", &CartpoleParams::max_cart_speed},
      {"max_pole_speed", &CartpoleParams::max_pole_speed},
      {"iterations", &CartpoleParams::iterations},
  };
  return t;
}

}  // namespace

CartpoleState cartpole_substep(CartpoleState s, double force, double dt, const CartpoleParams& p) {
  require(dt > 0.0, "physics dt must be positive");
  const int n = detail::iteration_count(p.iterations);
  const double h = dt / n;
  const double total = p.cart_mass + p.pole_mass;
  const double pml = p.pole_mass * p.half_length;
  for (int k = 0; k < n; ++k) {
    const double sin_t = std::sin(s.theta), cos_t = std::cos(s.theta);
    const double temp = (force + pml * s.theta_dot * s.theta_dot * sin_t) / total;
    const double theta_acc =
        (p.gravity * sin_t - cos_t * temp) / (p.half_length * (4.0 / 3.0 - p.pole_mass * cos_t * cos_t / total));
    const double x_acc = temp - pml * theta_acc * cos_t / total - p.cart_friction * s.x_dot;
    s.x_dot = std::clamp(s.x_dot + h * x_acc, -p.max_cart_speed, p.max_cart_speed);
    s.theta_dot = std::clamp(s.theta_dot + h * theta_acc, -p.max_pole_speed, p.max_pole_speed);
    s.x += h * s.x_dot;
    s.theta += h * s.theta_dot;
    if (s.x > p.track_limit || s.x < -p.track_limit) {
      s.x = std::clamp(s.x, -p.track_limit, p.track_limit);
      s.x_dot = 0.0;
    }
  }
  constexpr double pi = std::numbers::pi;
  s.theta = std::remainder(s.theta, 2 * pi);
  return s;
}

void CartpoleTask::reset(Rng& rng) {
  state_ = {};
  state_.x = uniform(rng, -0.25, 0.25);
  state_.theta = std::remainder(std::numbers::pi + uniform(rng, -0.25, 0.25), 2 * std::numbers::pi);
}

void CartpoleTask::substep(std::span<const double> action, double dt) {
  const double f = std::clamp(action[0], -1.0, 1.0) * params_.max_force;
  state_ = cartpole_substep(state_, f, dt, params_);
}

double CartpoleTask::reward() const {
  const double upright = 0.5 * (1.0 + std::cos(state_.theta));
  const double centred = (3.0 + std::exp(-state_.x * state_.x)) / 4.0;
  return std::clamp(upright * centred, 0.0, 1.0);
}

void CartpoleTask::render(Canvas& canvas) const {
  const double s = static_cast<double>(canvas.size());
  const double scale = s / (2.0 * (params_.track_limit + 0.4));
  const double ground = 0.6 * s;
  const double cx = 0.5 * s + state_.x * scale;
  const double pole = 2.0 * params_.half_length * scale;
  canvas.fill({235, 235, 225});
  canvas.rect(0.0, ground - 0.01 * s, s, ground + 0.01 * s + 0.5, {150, 150, 150});
  canvas.rect(cx - 0.25 * scale, ground - 0.125 * scale, cx + 0.25 * scale, ground + 0.125 * scale, {70, 130, 220});
  canvas.segment(cx, ground, cx + pole * std::sin(state_.theta), ground - pole * std::cos(state_.theta),
                 std::max(0.75, 0.03 * s), {200, 140, 30});
}

std::vector<double> CartpoleTask::state() const {
  return {state_.x, state_.x_dot, state_.theta, state_.theta_dot};
}

void CartpoleTask::set_state(std::span<const double> state) {
  require(state.size() == 4, "cartpole state has 4 entries (x, x_dot, theta, theta_dot)");
  state_ = {state[0], state[1], state[2], state[3]};
}

std::map<std::string, double> CartpoleTask::params() const { return detail::read_params(params_, table()); }

void CartpoleTask::set_param(const std::string& key, double value) {
  detail::write_param(params_, table(), "cartpole", key, value);
}

}  // namespace drq::envs
