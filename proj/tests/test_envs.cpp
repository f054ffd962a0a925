#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "drq/core/error.hpp"
#include "drq/core/rng.hpp"
#include "drq/envs/registry.hpp"
#include "drq/envs/tasks.hpp"

using namespace drq;
using namespace drq::envs;

namespace {

constexpr double kPi = std::numbers::pi;

EnvConfig config_for(const std::string& task, std::size_t render = 84, std::size_t steps = 1000) {
  EnvConfig c;
  c.task = task;
  c.render_size = render;
  c.episode_steps = steps;
  return c;
}

std::vector<std::uint8_t> render_state(const std::string& task, const std::vector<double>& state,
                                       std::size_t size = 84) {
  auto t = make_task(task);
  t->set_state(state);
  Canvas canvas(size);
  t->render(canvas);
  return canvas.take();
}

// Fraction of pixels whose RGB triple differs.
double differing_pixels(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  REQUIRE(a.size() == b.size());
  const std::size_t plane = a.size() / 3;
  std::size_t diff = 0;
  for (std::size_t i = 0; i < plane; ++i)
    diff += a[i] != b[i] || a[plane + i] != b[plane + i] || a[2 * plane + i] != b[2 * plane + i];
  return double(diff) / double(plane);
}

// Two-sided one-sample KS p-value from the asymptotic Kolmogorov
// distribution with the Stephens small-sample correction.
double ks_uniform_p_value(std::vector<double> xs, double lo, double hi) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = (xs[i] - lo) / (hi - lo);
    d = std::max({d, (double(i) + 1) / n - f, f - double(i) / n});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace

TEST_CASE("registry knows the three tasks") {
  const auto names = task_names();
  CHECK(names == std::vector<std::string>{"pendulum", "cartpole", "reacher"});
  for (const auto& n : names) CHECK(make_task(n)->name() == n);
  CHECK_THROWS_AS(make_task("humanoid"), ConfigError);
  CHECK(make_task("reacher")->action_dim() == 2);
}

TEST_CASE("config validation") {
  auto c = config_for("pendulum");
  c.episode_steps = 999;
  CHECK_THROWS_AS(make_env(c), ConfigError);
  c = config_for("pendulum");
  c.action_repeat = 0;
  CHECK_THROWS_AS(make_env(c), ConfigError);
  c = config_for("pendulum");
  c.physics["no_such_constant"] = 1.0;
  CHECK_THROWS_AS(make_env(c), ConfigError);
}

TEST_CASE("reset is deterministic and returns a stacked observation") {
  for (const auto& task : task_names()) {
    auto env = make_env(config_for(task));
    const auto a = env->reset(17);
    const auto state_a = env->task().state();
    const auto b = env->reset(17);
    CHECK(env->task().state() == state_a);
    CHECK(a.observation == b.observation);
    CHECK(a.observation.size() == 3 * 3 * 84 * 84);
    CHECK(a.frame.size() == 3 * 84 * 84);
    for (std::size_t k = 0; k < 3; ++k)
      CHECK(std::equal(a.frame.begin(), a.frame.end(), a.observation.begin() + k * a.frame.size()));
    env->reset(18);
    CHECK(env->task().state() != state_a);
  }
}

TEST_CASE("pendulum initial angle is uniform over [-pi, pi) (KS p > 0.01)") {
  auto env = make_env(config_for("pendulum", 8, 2));
  std::vector<double> thetas;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    env->reset(derive_seed(1234, 0, s));
    thetas.push_back(env->task().state()[0]);
    REQUIRE(thetas.back() >= -kPi);
    REQUIRE(thetas.back() < kPi);
  }
  CHECK(ks_uniform_p_value(thetas, -kPi, kPi) > 0.01);
  // The test must be able to reject: a shifted range fails.
  CHECK(ks_uniform_p_value(thetas, -kPi, kPi + 1.0) < 0.01);
}

TEST_CASE("pendulum rewards at the bottom and top") {
  auto env = make_env(config_for("pendulum"));
  const std::vector<float> zero{0.0f};
  env->reset(1);
  env->task().set_state(std::vector<double>{kPi, 0.0});
  CHECK(env->step(zero).reward == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  env->task().set_state(std::vector<double>{0.0, 0.0});
  CHECK(env->step(zero).reward == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("other tasks reward their goal states") {
  auto cart = make_task("cartpole");
  cart->set_state(std::vector<double>{0, 0, 0, 0});
  CHECK(cart->reward() == doctest::Approx(1.0));
  cart->set_state(std::vector<double>{0, 0, kPi, 0});
  CHECK(cart->reward() == doctest::Approx(0.0).scale(1.0));
  auto reacher = make_task("reacher");
  reacher->set_state(std::vector<double>{0.3, -0.2, 0, 0, 0.3, -0.2});
  CHECK(reacher->reward() == doctest::Approx(1.0));
  reacher->set_state(std::vector<double>{0.0, 0.0, 0, 0, 0.3, 0.4});
  CHECK(reacher->reward() == doctest::Approx(std::exp(-1.5)));
}

TEST_CASE("last flag fires exactly once, at the end of the step budget") {
  for (const auto& task : task_names()) {
    auto env = make_env(config_for(task, 16, 1000));
    env->reset(3);
    std::vector<float> action(env->action_dim(), 0.5f);
    std::size_t lasts = 0, steps = 0;
    const auto frames_before = env->env_frames();
    while (true) {
      const auto ts = env->step(action);
      ++steps;
      lasts += ts.last;
      if (ts.last) break;
      REQUIRE(steps < 10000);
    }
    CHECK(lasts == 1);
    CHECK(steps == 500);
    CHECK(env->env_frames() - frames_before == 1000);
    CHECK(env->episode_env_steps() == 1000);
    CHECK_THROWS_AS(env->step(action), ContractViolation);
    env->reset(4);
    CHECK(env->episode_env_steps() == 0);
  }
}

TEST_CASE("stepping before any reset is a contract violation") {
  auto env = make_env(config_for("pendulum", 16));
  CHECK_THROWS_AS(env->step(std::vector<float>{0.0f}), ContractViolation);
  env->reset(1);
  CHECK_THROWS_AS(env->step(std::vector<float>{0.0f, 0.0f}), ContractViolation);
}

TEST_CASE("out-of-range and non-finite actions are clipped") {
  auto a = make_env(config_for("pendulum", 16));
  auto b = make_env(config_for("pendulum", 16));
  a->reset(9);
  b->reset(9);
  CHECK(a->step(std::vector<float>{7.0f}).observation == b->step(std::vector<float>{1.0f}).observation);
  CHECK(a->task().state() == b->task().state());
  a->step(std::vector<float>{std::nanf("")});
  b->step(std::vector<float>{0.0f});
  CHECK(a->task().state() == b->task().state());
}

TEST_CASE("identical seed and actions give bitwise-identical trajectories") {
  for (const auto& task : task_names()) {
    auto a = make_env(config_for(task, 32, 200));
    auto b = make_env(config_for(task, 32, 200));
    a->reset(77);
    b->reset(77);
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
      std::vector<float> act(a->action_dim());
      for (auto& v : act) v = static_cast<float>(uniform(rng, -1, 1));
      const auto x = a->step(act), y = b->step(act);
      REQUIRE(x.observation == y.observation);
      REQUIRE(x.reward == y.reward);
      REQUIRE(x.last == y.last);
    }
  }
}

TEST_CASE("rewards stay in [0, 1] over 1e5 random steps") {
  for (const auto& task : task_names()) {
    auto env = make_env(config_for(task, 8, 1000));
    Rng rng(6);
    std::uint64_t episode = 0;
    env->reset(episode);
    double lo = 1, hi = 0;
    for (int t = 0; t < 100000; ++t) {
      std::vector<float> act(env->action_dim());
      for (auto& v : act) v = static_cast<float>(uniform(rng, -1.5, 1.5));
      const auto ts = env->step(act);
      lo = std::min(lo, ts.reward);
      hi = std::max(hi, ts.reward);
      REQUIRE(ts.reward >= 0.0);
      REQUIRE(ts.reward <= 1.0);
      if (ts.last) env->reset(++episode);
    }
    MESSAGE(task << " reward range [" << lo << ", " << hi << "]");
  }
}

TEST_CASE("render is deterministic and informative") {
  const auto a = render_state("pendulum", {0.4, 1.0});
  CHECK(a == render_state("pendulum", {0.4, 1.0}));
  CHECK(a.size() == 3 * 84 * 84);
  CHECK(differing_pixels(render_state("pendulum", {0.0, 0.0}), render_state("pendulum", {kPi, 0.0})) >= 0.01);
}

TEST_CASE("distinct poses render distinguishably (>= 0.5% of pixels)") {
  SUBCASE("pendulum angle grid") {
    std::vector<std::vector<std::uint8_t>> frames;
    for (int k = 0; k < 16; ++k) frames.push_back(render_state("pendulum", {-kPi + k * kPi / 8, 0.0}));
    for (std::size_t i = 0; i < frames.size(); ++i)
      for (std::size_t j = i + 1; j < frames.size(); ++j) REQUIRE(differing_pixels(frames[i], frames[j]) >= 0.005);
  }
  SUBCASE("cartpole position x angle grid") {
    std::vector<std::vector<std::uint8_t>> frames;
    for (double x : {-1.5, -0.75, 0.0, 0.75, 1.5})
      for (int k = 0; k < 8; ++k) frames.push_back(render_state("cartpole", {x, 0.0, -kPi + k * kPi / 4, 0.0}));
    for (std::size_t i = 0; i < frames.size(); ++i)
      for (std::size_t j = i + 1; j < frames.size(); ++j) REQUIRE(differing_pixels(frames[i], frames[j]) >= 0.005);
  }
  SUBCASE("reacher point x goal grid") {
    std::vector<std::vector<std::uint8_t>> frames;
    for (double px : {-0.6, 0.0, 0.6})
      for (double py : {-0.6, 0.0, 0.6})
        for (double gx : {-0.5, 0.5}) frames.push_back(render_state("reacher", {px, py, 0, 0, gx, 0.3}));
    for (std::size_t i = 0; i < frames.size(); ++i)
      for (std::size_t j = i + 1; j < frames.size(); ++j) REQUIRE(differing_pixels(frames[i], frames[j]) >= 0.005);
  }
}

TEST_CASE("pendulum physics") {
  const PendulumParams p;
  SUBCASE("hanging at rest is a fixed point") {
    PendulumState s{kPi, 0.0};
    for (int k = 0; k < 100; ++k) s = pendulum_substep(s, 0.0, 0.02, p);
    CHECK(std::abs(std::abs(s.theta) - kPi) < 1e-12);
    CHECK(std::abs(s.omega) < 1e-12);
  }
  SUBCASE("undamped energy is conserved within 1% over 1000 substeps") {
    PendulumParams q = p;
    q.damping = 0.0;
    for (double theta0 : {0.3, kPi / 2, 2.5, 0.01}) {
      PendulumState s{theta0, 0.0};
      const double e0 = pendulum_energy(s, q);
      // Reference scale: the swing's full energy range 2 m g l.
      const double scale = 2.0 * q.mass * q.gravity * q.length;
      double worst = 0;
      for (int k = 0; k < 1000; ++k) {
        s = pendulum_substep(s, 0.0, 0.02, q);
        worst = std::max(worst, std::abs(pendulum_energy(s, q) - e0));
      }
      CHECK(worst / scale < 0.01);
      // Energy measured above the lowest point of the swing.
      CHECK(worst / (e0 + q.mass * q.gravity * q.length) < 0.01);
    }
  }
  SUBCASE("max torque from rest moves the pendulum") {
    PendulumTask task;
    task.set_state(std::vector<double>{kPi, 0.0});
    task.substep(std::vector<double>{1.0}, 0.02);
    CHECK(std::abs(task.pendulum_state().omega) > 0.0);
  }
  SUBCASE("speed stays within its bound") {
    PendulumState s{0.0, 9.9};
    for (int k = 0; k < 500; ++k) {
      s = pendulum_substep(s, 2.0, 0.02, p);
      REQUIRE(std::abs(s.omega) <= p.max_speed);
    }
  }
}

TEST_CASE("cartpole and reacher physics") {
  SUBCASE("cartpole hanging at rest stays put") {
    CartpoleState s{0.0, 0.0, kPi, 0.0};
    for (int k = 0; k < 100; ++k) s = cartpole_substep(s, 0.0, 0.02, CartpoleParams{});
    CHECK(std::abs(s.x) < 1e-12);
    CHECK(std::abs(std::abs(s.theta) - kPi) < 1e-9);
  }
  SUBCASE("cartpole walls bound the cart") {
    CartpoleState s{};
    const CartpoleParams p;
    for (int k = 0; k < 2000; ++k) {
      s = cartpole_substep(s, p.max_force, 0.02, p);
      REQUIRE(std::abs(s.x) <= p.track_limit);
      REQUIRE(std::abs(s.x_dot) <= p.max_cart_speed);
    }
  }
  SUBCASE("reacher stays in the arena") {
    ReacherState s{};
    const ReacherParams p;
    for (int k = 0; k < 2000; ++k) {
      s = reacher_substep(s, p.max_accel, -p.max_accel, 0.02, p);
      REQUIRE(std::abs(s.x) <= p.arena);
      REQUIRE(std::abs(s.y) <= p.arena);
      REQUIRE(std::abs(s.vx) <= p.max_speed);
    }
  }
}

TEST_CASE("physics constants are overridable from the config") {
  auto c = config_for("pendulum", 16);
  c.physics["gravity"] = 3.5;
  c.physics["iterations"] = 4;
  auto env = make_env(c);
  CHECK(env->task().params().at("gravity") == 3.5);
  CHECK(env->task().params().at("iterations") == 4);
  CHECK(make_task("cartpole")->params().count("track_limit") == 1);
}

TEST_CASE("frame dump writes one PPM per rendered frame") {
  const auto dir = std::filesystem::temp_directory_path() / "drq_test_dump";
  std::filesystem::remove_all(dir);
  auto c = config_for("cartpole", 16, 6);
  c.dump_frames_dir = dir;
  auto env = make_env(c);
  env->reset(1);
  for (int k = 0; k < 3; ++k) env->step(std::vector<float>{0.2f});
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    ++files;
    std::ifstream in(entry.path(), std::ios::binary);
    std::string magic;
    in >> magic;
    CHECK(magic == "P6");
    CHECK(std::filesystem::file_size(entry.path()) > 16 * 16 * 3);
  }
  CHECK(files == 4);
  CHECK(std::filesystem::exists(dir / "ep000000_step000006.ppm"));
  std::filesystem::remove_all(dir);
}
