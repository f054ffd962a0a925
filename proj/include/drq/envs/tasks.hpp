#pragma once

#include "drq/envs/task.hpp"

// Equations of motion and reward definitions are written out in
// docs/environments.md. Every task integrates with semi-implicit Euler, split
// into `iterations` equal inner steps per substep call.
namespace drq::envs {

struct PendulumParams {
  double gravity = 9.81;     // m/s^2
  double length = 1.0;       // m
  double mass = 1.0;         // kg
  double damping = 0.1;      // 1/s
  double max_torque = 2.0;   // N m at |action| = 1
  double max_speed = 10.0;   // rad/s
  double iterations = 10;
};

// theta = 0 is upright, theta = pi hangs down.
struct PendulumState {
  double theta = 0.0;
  double omega = 0.0;
};

PendulumState pendulum_substep(PendulumState s, double torque, double dt, const PendulumParams& p);
// Kinetic plus potential energy, zero potential at the pivot height.
double pendulum_energy(const PendulumState& s, const PendulumParams& p);

class PendulumTask final : public Task {
 public:
  explicit PendulumTask(PendulumParams params = {}) : params_(params) {}

  std::string name() const override { return "pendulum"; }
  std::size_t action_dim() const override { return 1; }
  // theta ~ U[-pi, pi), omega = 0.
  void reset(Rng& rng) override;
  void substep(std::span<const double> action, double dt) override;
  // (1 + cos theta) / 2
  double reward() const override;
  void render(Canvas& canvas) const override;
  std::vector<double> state() const override { return {state_.theta, state_.omega}; }
  void set_state(std::span<const double> state) override;
  std::map<std::string, double> params() const override;
  void set_param(const std::string& key, double value) override;
  std::unique_ptr<Task> clone() const override { return std::make_unique<PendulumTask>(*this); }

  const PendulumState& pendulum_state() const { return state_; }
  const PendulumParams& pendulum_params() const { return params_; }

 private:
  PendulumParams params_;
  PendulumState state_;
};

struct CartpoleParams {
  double gravity = 9.81;
  double cart_mass = 1.0;     // kg
  double pole_mass = 0.1;     // kg
  double half_length = 0.5;   // m, pivot to pole centre of mass
  double cart_friction = 0.1; // 1/s
  double max_force = 10.0;    // N at |action| = 1
  double track_limit = 1.8;   // m
  double max_cart_speed = 8.0;    // m/s
  double max_pole_speed = 20.0;   // rad/s
  double iterations = 10;
};

struct CartpoleState {
  double x = 0.0, x_dot = 0.0;
  double theta = 0.0, theta_dot = 0.0;  // theta = 0 upright
};

CartpoleState cartpole_substep(CartpoleState s, double force, double dt, const CartpoleParams& p);

class CartpoleTask final : public Task {
 public:
  explicit CartpoleTask(CartpoleParams params = {}) : params_(params) {}

  std::string name() const override { return "cartpole"; }
  std::size_t action_dim() const override { return 1; }
  // x ~ U[-0.25, 0.25], theta ~ pi + U[-0.25, 0.25], velocities zero.
  void reset(Rng& rng) override;
  void substep(std::span<const double> action, double dt) override;
  // (1 + cos theta) / 2 * (3 + exp(-x^2)) / 4
  double reward() const override;
  void render(Canvas& canvas) const override;
  std::vector<double> state() const override;
  void set_state(std::span<const double> state) override;
  std::map<std::string, double> params() const override;
  void set_param(const std::string& key, double value) override;
  std::unique_ptr<Task> clone() const override { return std::make_unique<CartpoleTask>(*this); }

  const CartpoleState& cartpole_state() const { return state_; }

 private:
  CartpoleParams params_;
  CartpoleState state_;
};

struct ReacherParams {
  double arena = 1.0;        // half-width of the square arena, m
  double max_accel = 4.0;    // m/s^2 per axis at |action| = 1
  double drag = 1.0;         // 1/s
  double max_speed = 2.0;    // m/s per axis
  double goal_range = 0.8;   // goal and start drawn from [-goal_range, goal_range]^2
  double reward_scale = 3.0; // reward = exp(-reward_scale * distance)
  double iterations = 10;
};

struct ReacherState {
  double x = 0.0, y = 0.0, vx = 0.0, vy = 0.0;
  double goal_x = 0.0, goal_y = 0.0;
};

ReacherState reacher_substep(ReacherState s, double ax, double ay, double dt, const ReacherParams& p);

class ReacherTask final : public Task {
 public:
  explicit ReacherTask(ReacherParams params = {}) : params_(params) {}

  std::string name() const override { return "reacher"; }
  std::size_t action_dim() const override { return 2; }
  // Point and goal uniform over [-goal_range, goal_range]^2, velocity zero.
  void reset(Rng& rng) override;
  void substep(std::span<const double> action, double dt) override;
  double reward() const override;
  void render(Canvas& canvas) const override;
  std::vector<double> state() const override;
  void set_state(std::span<const double> state) override;
  std::map<std::string, double> params() const override;
  void set_param(const std::string& key, double value) override;
  std::unique_ptr<Task> clone() const override { return std::make_unique<ReacherTask>(*this); }

  const ReacherState& reacher_state() const { return state_; }

 private:
  ReacherParams params_;
  ReacherState state_;
};

}  // namespace drq::envs
