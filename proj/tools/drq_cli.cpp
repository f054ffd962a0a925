// Command-line front end: train, eval, bench, ablate, plot.
//
// Config precedence (later wins): built-in defaults, --config file,
// DRQ_* environment variables, command-line flags.
//
// Exit codes: 0 success, 1 usage, 2 config error, 3 runtime error,
// 4 numerics failure (non-finite loss or metric).

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "drq/agent/drqv2.hpp"
#include "drq/core/error.hpp"
#include "drq/envs/registry.hpp"
#include "drq/harness/ablation.hpp"
#include "drq/harness/benchmark.hpp"
#include "drq/harness/evaluate.hpp"
#include "drq/harness/plot.hpp"
#include "drq/harness/training.hpp"

namespace {

using namespace drq;
using namespace drq::harness;

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kRuntime = 3, kNumerics = 4 };

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string task;
  std::optional<std::uint64_t> frames;
  std::string out;
  bool reproducible = false;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "flat key = value config file");
  cmd->add_option("--seed", f.seed, "single seed (replaces run.seeds)");
  cmd->add_option("--task", f.task, "pendulum, cartpole or reacher");
  cmd->add_option("--frames", f.frames, "total environment frames");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_flag("--reproducible", f.reproducible, "single-threaded deterministic kernels");
  cmd->add_option("--set", f.sets, "extra key=value override (repeatable)");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig c;
  if (!f.config.empty()) c = load_config_file(f.config, c);
  apply_env_overrides(c);
  if (f.seed) c.seeds = {*f.seed};
  if (!f.task.empty()) c.env.task = f.task;
  if (f.frames) c.total_env_frames = *f.frames;
  if (!f.out.empty()) c.out_dir = f.out;
  if (f.reproducible) c.reproducible = true;
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    apply(c, s.substr(0, eq), s.substr(eq + 1));
  }
  validate(c);
  return c;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_train(const CommonFlags& f, bool resume) {
  const RunConfig c = resolve(f);
  for (const auto seed : c.seeds) {
    TrainingOptions opt;
    opt.resume = resume;
    opt.on_row = [](const MetricRow& r) {
      std::printf("frame %llu  return %.2f  fps %.1f  sigma %.3f\n", static_cast<unsigned long long>(r.env_frame),
                  r.episode_return, r.fps, r.sigma);
      std::fflush(stdout);
    };
    const auto r = run_training(c, seed, opt);
    std::printf("seed %llu: %llu frames, %llu updates, metrics %s\n", static_cast<unsigned long long>(seed),
                static_cast<unsigned long long>(r.env_frames), static_cast<unsigned long long>(r.updates),
                r.metrics_path.string().c_str());
  }
  return kOk;
}

int cmd_eval(const CommonFlags& f, const std::string& checkpoint, std::size_t episodes, bool random) {
  const RunConfig c = resolve(f);
  auto env = envs::make_env(c.env);
  const auto frame = env->frame_spec();
  const std::uint64_t seed = c.seeds.front();
  EvalResult result;
  if (random) {
    result = evaluate(random_policy(env->action_dim(), seed), *env, episodes, seed);
  } else {
    if (checkpoint.empty()) throw ConfigError("eval needs --checkpoint or --random");
    agent::DrQV2Agent<float> a(c.agent, {c.env.frame_stack * frame.channels, frame.height, frame.width},
                               env->action_dim(), seed);
    a.load(checkpoint);
    const Policy policy = [&](std::span<const std::uint8_t> o) { return a.act(o, 0, agent::ActMode::kEval); };
    result = evaluate(policy, *env, episodes, seed);
  }
  for (std::size_t k = 0; k < result.returns.size(); ++k) std::printf("episode %zu return %.4f\n", k, result.returns[k]);
  std::printf("mean return %.4f over %zu episodes\n", result.mean, result.returns.size());
  return kOk;
}

int cmd_bench(const CommonFlags& f, bool quick) {
  RunConfig c = resolve(f);
  AugmentBench aug;
  BufferBench buf;
  if (quick) {
    aug.batch = 32;
    buf.sample_reps = 5;
  }
  const auto report = benchmark_throughput(c, aug, buf);
  const std::string text = report_json(report);
  std::filesystem::create_directories(c.out_dir);
  const auto path = c.out_dir / "bench_report.json";
  std::ofstream(path) << text << '\n';
  std::printf("%s\nreport written to %s\n", text.c_str(), path.string().c_str());
  return kOk;
}

int cmd_ablate(const CommonFlags& f, const std::string& axis, const std::string& values) {
  const RunConfig c = resolve(f);
  const auto result = run_ablation(parse_axis(axis), split_list(values), c);
  std::printf("%s\ntable: %s\n", comparison_table_markdown(result).c_str(), result.table_md.string().c_str());
  return kOk;
}

int cmd_plot(const std::vector<std::string>& files, const std::string& out, const std::string& title) {
  std::vector<std::filesystem::path> paths(files.begin(), files.end());
  const auto o = plot(paths, out.empty() ? std::filesystem::path("plots") : std::filesystem::path(out), title);
  std::printf("wrote %s and %s\n", o.frames_svg.string().c_str(), o.wall_clock_svg.string().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DrQ-v2 pixel control: training, evaluation, benchmarks, ablations, plots"};
  app.require_subcommand(1);

  CommonFlags train_f, eval_f, bench_f, ablate_f;
  bool resume = false;
  auto* train = app.add_subcommand("train", "train one run per seed");
  add_common(train, train_f);
  train->add_flag("--resume", resume, "continue from the last resume point");
  std::string dump_dir;
  train->add_option("--dump-frames", dump_dir, "write every rendered frame as PPM into this directory");

  std::string checkpoint;
  std::size_t episodes = 10;
  bool random = false;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint (or the random policy)");
  add_common(eval, eval_f);
  eval->add_option("--checkpoint", checkpoint, "agent checkpoint file");
  eval->add_option("--episodes", episodes, "episodes to average");
  eval->add_flag("--random", random, "uniform-random policy baseline");
  eval->add_option("--dump-frames", dump_dir, "write every rendered frame as PPM into this directory");

  bool quick = false;
  auto* bench = app.add_subcommand("bench", "throughput benchmark report");
  add_common(bench, bench_f);
  bench->add_flag("--quick", quick, "smaller augmentation batch");

  std::string axis, values;
  auto* ablate = app.add_subcommand("ablate", "one run per (axis value, seed)");
  add_common(ablate, ablate_f);
  ablate->add_option("--axis", axis, "nstep, buffer_capacity or noise_schedule")->required();
  ablate->add_option("--values", values, "comma-separated values, e.g. 1,3,5 or fixed,schedule")->required();

  std::vector<std::string> files;
  std::string plot_out, title = "episode return";
  auto* plot_cmd = app.add_subcommand("plot", "learning curves with 95% confidence bands");
  plot_cmd->add_option("files", files, "metrics.csv files, one per seed")->required();
  plot_cmd->add_option("--out", plot_out, "output directory");
  plot_cmd->add_option("--title", title, "plot title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (!dump_dir.empty()) {
      train_f.sets.push_back("env.dump_frames_dir=" + dump_dir);
      eval_f.sets.push_back("env.dump_frames_dir=" + dump_dir);
    }
    if (*train) return cmd_train(train_f, resume);
    if (*eval) return cmd_eval(eval_f, checkpoint, episodes, random);
    if (*bench) return cmd_bench(bench_f, quick);
    if (*ablate) return cmd_ablate(ablate_f, axis, values);
    if (*plot_cmd) return cmd_plot(files, plot_out, title);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const NumericsError& e) {
    std::fprintf(stderr, "numerics failure: %s\n", e.what());
    return kNumerics;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kUsage;
}
