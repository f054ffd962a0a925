#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <sys/wait.h>

#include "drq/core/error.hpp"
#include "drq/harness/ablation.hpp"
#include "drq/harness/benchmark.hpp"
#include "drq/harness/evaluate.hpp"
#include "drq/harness/metrics.hpp"
#include "drq/harness/plot.hpp"
#include "drq/harness/run_config.hpp"
#include "drq/harness/stats.hpp"
#include "drq/harness/training.hpp"

using namespace drq;
using namespace drq::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const char* base = std::getenv("DRQ_TEST_TMP");
  const fs::path root = base ? fs::path(base) : fs::temp_directory_path() / "drq_test_harness";
  const fs::path dir = root / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A run small enough for unit tests: 16 px frames, 50 actor steps per episode.
RunConfig tiny_config(const fs::path& out) {
  RunConfig c;
  c.env.task = "pendulum";
  c.env.render_size = 16;
  c.env.episode_steps = 100;
  c.agent.batch_size = 8;
  c.agent.features_dim = 8;
  c.agent.hidden_dim = 16;
  c.agent.filters = 4;
  c.agent.seed_frames = 100;
  c.agent.exploration_actor_steps = 50;
  c.agent.schedule = agent::NoiseSchedule::linear(1.0, 0.1, 1000);
  c.buffer_capacity = 10000;
  c.total_env_frames = 400;
  c.eval_every_frames = 100;
  c.eval_episodes = 1;
  c.checkpoint_every_episodes = 2;
  c.reproducible = true;
  c.threads = 1;
  c.out_dir = out;
  return c;
}

class StubEnv : public envs::Environment {
 public:
  StubEnv(double reward, std::size_t actor_steps) : reward_(reward), steps_(actor_steps) {}
  envs::TimeStep reset(std::uint64_t) override {
    t_ = 0;
    return make(0.0);
  }
  envs::TimeStep step(std::span<const float>) override {
    ++t_;
    frames_ += 2;
    return make(reward_);
  }
  std::size_t action_dim() const override { return 1; }
  replay::FrameSpec frame_spec() const override { return {3, 4, 4}; }
  std::size_t frame_stack() const override { return 3; }
  std::size_t action_repeat() const override { return 2; }
  std::size_t episode_steps() const override { return steps_ * 2; }
  std::uint64_t env_frames() const override { return frames_; }

 private:
  envs::TimeStep make(double r) const {
    envs::TimeStep ts;
    ts.frame.assign(48, 0);
    ts.observation.assign(144, 0);
    ts.reward = r;
    ts.last = t_ >= steps_;
    return ts;
  }
  double reward_;
  std::size_t steps_;
  std::size_t t_ = 0;
  std::uint64_t frames_ = 0;
};

// Arms write to their own directories; everything else must match.
std::vector<std::string> knob_diff(const RunConfig& a, const RunConfig& b) {
  auto d = config_diff(a, b);
  std::erase(d, "run.out_dir");
  return d;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DRQ_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config text round trip and errors") {
  RunConfig c;
  c.agent.batch_size = 64;
  c.env.task = "reacher";
  c.seeds = {1, 2, 3};
  c.agent.schedule = agent::NoiseSchedule::fixed(0.2);
  const RunConfig back = parse_config_text(to_config_text(c));
  CHECK(to_config_text(back) == to_config_text(c));
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_diff(back, c).empty());

  const auto parsed = parse_config_text("# comment\nagent.nstep = 5  # trailing\n\nrun.seeds = 4,5\nenv.physics.gravity = 9.0\n");
  CHECK(parsed.agent.nstep == 5);
  CHECK(parsed.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(parsed.env.physics.at("gravity") == 9.0);
  auto diff = config_diff(parsed, RunConfig{});
  std::sort(diff.begin(), diff.end());
  CHECK(diff == std::vector<std::string>{"agent.nstep", "env.physics.gravity", "run.seeds"});

  CHECK_THROWS_AS(parse_config_text("agent.no_such_key = 1"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("agent.batch_size = many"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("just words"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("agent.schedule = cosine"), ConfigError);

  RunConfig bad;
  bad.eval_every_frames = 20001;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = RunConfig{};
  bad.total_env_frames = bad.agent.seed_frames - 2;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = RunConfig{};
  bad.env.physics["no_such_constant"] = 1.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  validate(RunConfig{});
}

TEST_CASE("environment variable overrides") {
  CHECK(env_var_name("agent.batch_size") == "DRQ_AGENT_BATCH_SIZE");
  CHECK(env_var_name("run.total_env_frames") == "DRQ_RUN_TOTAL_ENV_FRAMES");
  ::setenv("DRQ_AGENT_BATCH_SIZE", "32", 1);
  ::setenv("DRQ_ENV_TASK", "cartpole", 1);
  RunConfig c;
  apply_env_overrides(c);
  ::unsetenv("DRQ_AGENT_BATCH_SIZE");
  ::unsetenv("DRQ_ENV_TASK");
  CHECK(c.agent.batch_size == 32);
  CHECK(c.env.task == "cartpole");
  ::setenv("DRQ_AGENT_LR", "fast", 1);
  CHECK_THROWS_AS(apply_env_overrides(c), ConfigError);
  ::unsetenv("DRQ_AGENT_LR");
}

TEST_CASE("metric rows format, parse and flush") {
  MetricRow row{20000, 12.5, 431.25, 96.0, 0.75, -3.5, 0.82};
  const auto back = parse_row(format_row(row), 1);
  CHECK(back.env_frame == 20000);
  CHECK(back.episode_return == 431.25);
  CHECK(back.sigma == 0.82);

  MetricRow early{2000, 1.0, 3.0, 50.0, std::numeric_limits<double>::quiet_NaN(),
                  std::numeric_limits<double>::quiet_NaN(), 1.0};
  const auto text = format_row(early);
  CHECK(text.find(",,") != std::string::npos);
  CHECK(std::isnan(parse_row(text, 2).critic_loss));

  const auto dir = scratch("metrics");
  const auto path = dir / "m.csv";
  {
    MetricsWriter w(path, false);
    w.append(early);
    w.append(row);
    // Readable while the writer is still open.
    const auto rows = read_metrics(path);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].env_frame == 20000);
    CHECK_THROWS_AS(w.append(early), ContractViolation);
  }
  {
    MetricsWriter w(path, true, 2000);
    w.append(MetricRow{4000, 2, 5, 50, 1, 1, 0.9});
  }
  const auto rows = read_metrics(path);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].env_frame == 4000);

  CHECK(strip_wall_clock(std::string(kMetricsHeader) + "\n100,1.5,3,7.25,1,2,0.5\n") ==
        std::string(kMetricsHeader) + "\n100,,3,,1,2,0.5\n");

  std::ofstream(dir / "bad.csv") << kMetricsHeader << "\n100,1,2,3,4,5,6\n200,1,oops,3,4,5,6\n";
  try {
    read_metrics(dir / "bad.csv");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("statistics against scipy reference values") {
  // scipy.stats.t.ppf(0.975, df)
  CHECK(t_critical(1) == doctest::Approx(12.706204736432095).epsilon(1e-9));
  CHECK(t_critical(2) == doctest::Approx(4.302652729696142).epsilon(1e-9));
  CHECK(t_critical(4) == doctest::Approx(2.7764451051977987).epsilon(1e-9));
  CHECK(t_critical(9) == doctest::Approx(2.2621571628540993).epsilon(1e-9));

  const std::vector<double> v{1.0, 2.0, 4.0};
  const auto ci = confidence_interval(v);
  CHECK(ci.n == 3);
  CHECK(ci.lower() == doctest::Approx(-1.4612497002164022).epsilon(1e-9));
  CHECK(ci.upper() == doctest::Approx(6.127916366883069).epsilon(1e-9));
  const std::vector<double> one{7.0};
  CHECK(confidence_interval(one).half_width == 0.0);

  std::vector<MetricRow> rows(2);
  rows[0].env_frame = 0;
  rows[0].episode_return = 0;
  rows[1].env_frame = 10;
  rows[1].episode_return = 10;
  CHECK(area_under_curve(rows) == 5.0);
  CHECK(area_under_curve({rows[1]}) == 10.0);
}

TEST_CASE("plot bands") {
  auto run = [](std::vector<double> returns) {
    std::vector<MetricRow> rows;
    for (std::size_t k = 0; k < returns.size(); ++k) {
      MetricRow r;
      r.env_frame = 20000 * (k + 1);
      r.wall_clock_s = 10.0 * double(k + 1);
      r.episode_return = returns[k];
      rows.push_back(r);
    }
    return rows;
  };
  const auto single = band_by_frame({run({5, 6, 7})});
  CHECK(single.mean == std::vector<double>{5, 6, 7});
  CHECK(single.lower == single.mean);
  CHECK(single.upper == single.mean);

  const auto pair = band_by_frame({run({100, 100}), run({200, 200})});
  CHECK(pair.mean == std::vector<double>{150, 150});

  const auto three = band_by_frame({run({1, 0}), run({2, 0}), run({4, 0})});
  CHECK(three.x == std::vector<double>{20000, 40000});
  CHECK(three.lower[0] == doctest::Approx(-1.4612497002164022).epsilon(1e-9));
  CHECK(three.upper[0] == doctest::Approx(6.127916366883069).epsilon(1e-9));
  CHECK(three.lower[1] == 0.0);

  const auto wall = band_by_wall_clock({run({1, 2}), run({3, 4})});
  CHECK(wall.x == std::vector<double>{10, 20});
  CHECK(wall.mean == std::vector<double>{2, 3});

  const auto dir = scratch("plot");
  std::vector<fs::path> files;
  for (int s = 0; s < 2; ++s) {
    files.push_back(dir / ("m" + std::to_string(s) + ".csv"));
    MetricsWriter w(files.back(), false);
    for (const auto& r : run({double(s), double(s + 1)})) w.append(r);
  }
  const auto out = plot(files, dir / "plots", "test");
  CHECK(fs::exists(out.frames_svg));
  CHECK(fs::exists(out.wall_clock_svg));
  CHECK(slurp(out.frames_svg).find("<svg") != std::string::npos);
  CHECK_THROWS_AS(plot({}, dir / "plots", "x"), ContractViolation);
}

TEST_CASE("evaluate on stub environments") {
  StubEnv zero(0.0, 500), one(1.0, 500);
  const auto policy = random_policy(1, 3);
  const auto z = evaluate(policy, zero, 3, 1);
  CHECK(z.mean == 0.0);
  CHECK(z.returns.size() == 3);
  const auto o = evaluate(policy, one, 10, 1);
  CHECK(o.mean == 500.0);
  for (double r : o.returns) CHECK(r == 500.0);

  auto rp = random_policy(3, 9);
  const std::vector<std::uint8_t> obs(8);
  for (int k = 0; k < 100; ++k)
    for (float a : rp(obs)) {
      REQUIRE(a >= -1.0f);
      REQUIRE(a <= 1.0f);
    }
}

TEST_CASE("zero learner updates when the budget equals the seed frames") {
  auto c = tiny_config(scratch("no_updates"));
  c.agent.seed_frames = 200;
  c.total_env_frames = 200;
  const auto r = run_training(c, 1);
  CHECK(r.updates == 0);
  CHECK(r.env_frames == c.total_env_frames);
  CHECK(fs::exists(r.final_checkpoint));
  CHECK(fs::exists(r.run_dir / "metrics.json"));
  CHECK(read_metrics(r.metrics_path).size() == 2);
}

TEST_CASE("evaluation cadence: 5 rows over 100000 frames") {
  auto c = tiny_config(scratch("cadence"));
  c.env.episode_steps = 1000;
  c.total_env_frames = 100000;
  c.eval_every_frames = 20000;
  c.agent.seed_frames = 100000;
  c.agent.exploration_actor_steps = 50000;
  c.checkpoint_every_episodes = 0;
  const auto r = run_training(c, 2);
  const auto rows = read_metrics(r.metrics_path);
  REQUIRE(rows.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(rows[k].env_frame == 20000 * (k + 1));
    CHECK(rows[k].episode_return >= 0.0);
    CHECK(rows[k].episode_return <= 500.0);
  }
  CHECK(r.actor_steps * c.env.action_repeat == r.env_frames);
  CHECK(r.updates == 0);
}

TEST_CASE("reproducible runs give identical metrics; resume continues identically") {
  const auto dir = scratch("determinism");
  auto c = tiny_config(dir / "a");
  c.total_env_frames = 600;
  c.log_updates = true;
  const auto a = run_training(c, 7);
  c.out_dir = dir / "b";
  const auto b = run_training(c, 7);
  CHECK(a.updates > 0);
  CHECK(strip_wall_clock(slurp(a.metrics_path)) == strip_wall_clock(slurp(b.metrics_path)));
  CHECK(slurp(a.run_dir / "updates.csv") == slurp(b.run_dir / "updates.csv"));
  CHECK(slurp(a.final_checkpoint) == slurp(b.final_checkpoint));

  c.out_dir = dir / "other_seed";
  const auto other = run_training(c, 8);
  CHECK(slurp(other.run_dir / "updates.csv") != slurp(a.run_dir / "updates.csv"));

  c.out_dir = dir / "resumed";
  TrainingOptions halt;
  halt.halt_at_frame = 500;
  const auto first = run_training(c, 7, halt);
  CHECK(first.halted);
  CHECK_FALSE(fs::exists(first.final_checkpoint));
  TrainingOptions resume;
  resume.resume = true;
  const auto second = run_training(c, 7, resume);
  CHECK(second.resumed);
  CHECK(second.env_frames == 600);
  CHECK(strip_wall_clock(slurp(second.metrics_path)) == strip_wall_clock(slurp(a.metrics_path)));
  CHECK(slurp(second.final_checkpoint) == slurp(a.final_checkpoint));
}

TEST_CASE("non-finite training aborts with diagnostic state") {
  auto c = tiny_config(scratch("numerics"));
  c.agent.lr = 1e30;
  c.total_env_frames = 600;
  CHECK_THROWS_AS(run_training(c, 1), NumericsError);
  CHECK(fs::exists(run_dir(c, 1) / "diagnostic.ckpt"));
  CHECK(fs::exists(run_dir(c, 1) / "diagnostic.json"));
}

TEST_CASE("benchmark meters") {
  auto c = tiny_config(scratch("bench"));
  c.total_env_frames = 2000;
  c.eval_every_frames = 1000;
  const auto t0 = std::chrono::steady_clock::now();
  const auto e2e = bench_end_to_end(c);
  const double stopwatch = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(e2e.frames == 2000);
  CHECK(e2e.fps == doctest::Approx(double(e2e.frames) / e2e.elapsed_s).epsilon(1e-12));
  CHECK(std::abs(e2e.fps - double(e2e.frames) / stopwatch) / e2e.fps < 0.01);

  AugmentBench aug;
  aug.batch = 8;
  aug.reference_reps = 1;
  aug.optimized_reps = 2;
  const auto a = bench_augmentation(aug);
  CHECK(a.reference_images_per_s > 0);
  CHECK(a.optimized_images_per_s > 0);
  CHECK(a.max_abs_diff <= 1e-6);

  BufferBench buf;
  buf.episodes = 2;
  buf.episode_length = 50;
  buf.sample_reps = 3;
  const auto bb = bench_buffer(buf);
  CHECK(bb.add_steps_per_s > 0);
  CHECK(bb.sample_transitions_per_s > 0);

  const auto json = report_json(BenchReport{hardware_info(), a, bb, e2e});
  CHECK(json.find("\"hardware\"") != std::string::npos);
  CHECK(json.find("\"speedup\"") != std::string::npos);
}

TEST_CASE("ablation configs change exactly one key") {
  const RunConfig base = tiny_config(scratch("ablation_cfg"));
  const auto n1 = ablation_config(base, AblationAxis::kNstep, "1");
  const auto n3 = ablation_config(base, AblationAxis::kNstep, "3");
  CHECK(knob_diff(n1, n3) == std::vector<std::string>{"agent.nstep"});

  const auto fixed = ablation_config(base, AblationAxis::kNoiseSchedule, "fixed");
  for (std::uint64_t t : {0ULL, 1000ULL, 100000ULL, 10'000'000ULL}) CHECK(fixed.agent.schedule(t) == 0.2);
  CHECK(ablation_config(base, AblationAxis::kNoiseSchedule, "schedule").agent.schedule == base.agent.schedule);

  const auto small = ablation_config(base, AblationAxis::kBufferCapacity, "100000");
  const auto large = ablation_config(base, AblationAxis::kBufferCapacity, "1000000");
  CHECK(small.buffer_capacity == 100000);
  CHECK(large.buffer_capacity == 1000000);
  CHECK(knob_diff(small, large) == std::vector<std::string>{"buffer.capacity"});

  CHECK(parse_axis("nstep") == AblationAxis::kNstep);
  CHECK(axis_key(AblationAxis::kNoiseSchedule) == "agent.schedule");
  CHECK_THROWS_AS(parse_axis("learning_rate"), ConfigError);
  CHECK_THROWS_AS(ablation_config(base, AblationAxis::kNstep, "zero"), ConfigError);
  CHECK_THROWS_AS(ablation_config(base, AblationAxis::kNstep, "0"), ConfigError);
  CHECK_THROWS_AS(ablation_config(base, AblationAxis::kBufferCapacity, "10"), ConfigError);
}

TEST_CASE("ablation orchestration") {
  const auto dir = scratch("ablation");
  auto base = tiny_config(dir / "runs");
  base.total_env_frames = 200;

  CHECK_THROWS_AS(run_ablation(AblationAxis::kNstep, {"1", "bogus"}, base), ConfigError);
  CHECK_FALSE(fs::exists(dir / "runs"));

  const auto result = run_ablation(AblationAxis::kNstep, {"1", "3"}, base);
  REQUIRE(result.arms.size() == 2);
  for (const auto& arm : result.arms) {
    REQUIRE(arm.metrics.size() == 1);
    CHECK(fs::exists(arm.metrics[0]));
    CHECK(arm.auc.size() == 1);
  }
  CHECK(result.arms[0].metrics[0] != result.arms[1].metrics[0]);
  CHECK(fs::exists(result.table_csv));
  CHECK(fs::exists(result.table_md));
  const auto table = comparison_table_markdown(result);
  CHECK(table.find("| 1 ") != std::string::npos);
  CHECK(table.find("| 3 ") != std::string::npos);
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch("cli");
  const std::string tiny = "--set env.render_size=16 --set env.episode_steps=100 --set agent.seed_frames=100 "
                           "--set agent.batch_size=8 --set run.eval_every_frames=100 --set run.eval_episodes=1 "
                           "--set buffer.capacity=1000";
  CHECK(run_cli("") == 1);
  CHECK(run_cli("fly") == 1);
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("train --task nowhere --out " + dir.string()) == 2);
  CHECK(run_cli("train --config " + (dir / "missing.cfg").string()) == 2);
  CHECK(run_cli("train --set agent.batch_size=0 --out " + dir.string()) == 2);
  CHECK(run_cli("train " + tiny + " --frames 200 --seed 3 --reproducible --out " + (dir / "t").string()) == 0);
  CHECK(fs::exists(dir / "t" / "seed_3" / "metrics.csv"));
  CHECK(run_cli("eval " + tiny + " --random --episodes 2") == 0);
  CHECK(run_cli("eval " + tiny + " --checkpoint " + (dir / "t" / "seed_3" / "final.ckpt").string() + " --episodes 1") ==
        0);
  CHECK(run_cli("eval " + tiny + " --checkpoint " + (dir / "nothing.ckpt").string()) == 3);
  CHECK(run_cli("plot " + (dir / "t" / "seed_3" / "metrics.csv").string() + " --out " + (dir / "p").string()) == 0);
  CHECK(run_cli("train " + tiny + " --set agent.lr=1e30 --frames 600 --out " + (dir / "nan").string()) == 4);
}
