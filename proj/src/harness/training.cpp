#include "drq/harness/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <thread>

#include <json.hpp>

#include "drq/agent/drqv2.hpp"
#include "drq/core/error.hpp"
#include "drq/core/file.hpp"
#include "drq/core/parallel.hpp"
#include "drq/envs/registry.hpp"
#include "drq/harness/benchmark.hpp"
#include "drq/harness/evaluate.hpp"
#include "drq/replay/episode_io.hpp"

namespace drq::harness {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Counters that, together with the agent checkpoint and stored episodes,
// fully determine how a run continues.
struct LoopState {
  std::uint64_t frames = 0;
  std::uint64_t actor_steps = 0;
  std::uint64_t episodes = 0;
  double critic_loss = kNaN;
  double actor_loss = kNaN;
  double elapsed_s = 0.0;
};

json nullable(double v) { return std::isnan(v) ? json(nullptr) : json(v); }
double from_nullable(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

std::string episode_file(std::uint64_t seq) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ep_%08llu.bin", static_cast<unsigned long long>(seq));
  return buf;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

json config_json(const RunConfig& config) {
  json kv = json::object();
  for (const auto& [k, v] : to_key_values(config)) kv[k] = v;
  return kv;
}

void write_sidecar(const fs::path& path, const RunConfig& config, std::uint64_t seed) {
  json j;
  j["seed"] = seed;
  j["config"] = config_json(config);
  j["config_hash"] = config_hash(config);
  j["hardware"] = json::parse(hardware_json(hardware_info()));
  j["columns"] = kMetricsHeader;
  write_text_atomic(path, j.dump(2) + "\n");
}

class Checkpointer {
 public:
  Checkpointer(fs::path dir, const RunConfig& config) : dir_(std::move(dir)), hash_(config_hash(config)) {}

  bool exists() const { return fs::exists(dir_ / "resume.json"); }

  void save(const agent::DrQV2Agent<float>& agent, const replay::ReplayBuffer& buffer, const LoopState& st) {
    fs::create_directories(dir_ / "episodes");
    const std::uint64_t held = buffer.closed_episodes();
    const std::uint64_t first = st.episodes - held;
    json names = json::array();
    for (std::uint64_t i = 0; i < held; ++i) {
      const auto name = episode_file(first + i);
      if (!fs::exists(dir_ / "episodes" / name)) replay::write_episode(dir_ / "episodes" / name, buffer.episode(i));
      names.push_back(name);
    }
    const std::string ckpt = "agent_" + std::to_string(st.episodes) + ".ckpt";
    agent.save(dir_ / ckpt);

    json j;
    j["config_hash"] = hash_;
    j["frames"] = st.frames;
    j["actor_steps"] = st.actor_steps;
    j["episodes"] = st.episodes;
    j["critic_loss"] = nullable(st.critic_loss);
    j["actor_loss"] = nullable(st.actor_loss);
    j["elapsed_s"] = st.elapsed_s;
    j["agent_checkpoint"] = ckpt;
    j["agent_rng"] = agent.rng_states();
    j["buffer_episodes"] = names;
    write_text_atomic(dir_ / "resume.json", j.dump(1) + "\n");

    // The resume point is committed; drop files it no longer references.
    for (const auto& entry : fs::directory_iterator(dir_)) {
      const auto name = entry.path().filename().string();
      if (name.rfind("agent_", 0) == 0 && name != ckpt) fs::remove(entry.path());
    }
    for (const auto& entry : fs::directory_iterator(dir_ / "episodes")) {
      const auto name = entry.path().filename().string();
      if (name < episode_file(first)) fs::remove(entry.path());
    }
  }

  LoopState load(agent::DrQV2Agent<float>& agent, replay::ReplayBuffer& buffer) const {
    std::ifstream in(dir_ / "resume.json");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw FormatError((dir_ / "resume.json").string() + ": " + e.what());
    }
    if (j.at("config_hash").get<std::string>() != hash_) {
      throw ConfigError("resume point in " + dir_.string() + " was written with a different configuration");
    }
    agent.load(dir_ / j.at("agent_checkpoint").get<std::string>());
    agent.set_rng_states(j.at("agent_rng").get<std::vector<std::string>>());
    for (const auto& name : j.at("buffer_episodes")) {
      buffer.add_episode(replay::read_episode(dir_ / "episodes" / name.get<std::string>()));
    }
    LoopState st;
    st.frames = j.at("frames").get<std::uint64_t>();
    st.actor_steps = j.at("actor_steps").get<std::uint64_t>();
    st.episodes = j.at("episodes").get<std::uint64_t>();
    st.critic_loss = from_nullable(j.at("critic_loss"));
    st.actor_loss = from_nullable(j.at("actor_loss"));
    st.elapsed_s = j.at("elapsed_s").get<double>();
    return st;
  }

 private:
  fs::path dir_;
  std::string hash_;
};

class UpdateLog {
 public:
  UpdateLog(const fs::path& path, bool append) : out_(path, append ? std::ios::app : std::ios::trunc) {
    if (!append) out_ << "kind,update,sigma,critic1_loss,critic2_loss,actor_loss,q_mean,target_mean,max_abs_noise\n";
  }
  void write(const agent::UpdateStats& s) {
    const bool critic = s.kind == agent::UpdateStats::Kind::kCritic;
    out_ << (critic ? "critic" : "actor") << ',' << s.update_index << ',' << s.sigma << ',' << s.critic1_loss << ','
         << s.critic2_loss << ',' << s.actor_loss << ',' << s.q_mean << ',' << s.target_mean << ','
         << s.max_abs_noise << '\n';
  }

 private:
  std::ofstream out_;
};

}  // namespace

fs::path run_dir(const RunConfig& config, std::uint64_t seed) {
  return config.out_dir / ("seed_" + std::to_string(seed));
}

TrainingResult run_training(const RunConfig& config, std::uint64_t seed, const TrainingOptions& options) {
  validate(config);
  set_reproducible(config.reproducible);
  set_num_threads(config.threads > 0 ? config.threads : std::max(1u, std::thread::hardware_concurrency()));

  TrainingResult result;
  result.run_dir = run_dir(config, seed);
  result.metrics_path = result.run_dir / "metrics.csv";
  result.final_checkpoint = result.run_dir / "final.ckpt";
  fs::create_directories(result.run_dir);

  auto env = envs::make_env(config.env);
  const replay::FrameSpec frame = env->frame_spec();
  const agent::ObsSpec obs{config.env.frame_stack * frame.channels, frame.height, frame.width};
  agent::DrQV2Agent<float> agent(config.agent, obs, env->action_dim(), derive_seed(seed, 0));
  replay::ReplayBuffer buffer(config.buffer(), frame, env->action_dim());
  Checkpointer checkpointer(result.run_dir / "state", config);

  LoopState st;
  if (options.resume && checkpointer.exists()) {
    st = checkpointer.load(agent, buffer);
    result.resumed = true;
  }
  write_sidecar(result.run_dir / "metrics.json", config, seed);
  MetricsWriter writer(result.metrics_path, result.resumed, st.frames);
  std::unique_ptr<UpdateLog> update_log;
  if (config.log_updates) {
    update_log = std::make_unique<UpdateLog>(result.run_dir / "updates.csv", result.resumed);
    agent.set_diagnostics_hook([&](const agent::UpdateStats& s) { update_log->write(s); });
  }

  const std::uint64_t frame_offset = st.frames;
  const std::uint64_t repeat = config.env.action_repeat;
  const auto start = Clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
  const auto finish = [&](bool halted) {
    result.env_frames = st.frames;
    result.actor_steps = st.actor_steps;
    result.episodes = st.episodes;
    result.updates = agent.update_count();
    result.halted = halted;
    result.elapsed_s = elapsed();
    return result;
  };

  try {
    while (st.frames < config.total_env_frames) {
      envs::TimeStep ts = env->reset(derive_seed(seed, 1, st.episodes));
      buffer.begin_episode(ts.frame);
      while (!ts.last) {
        const auto mode =
            st.actor_steps < config.agent.exploration_actor_steps ? agent::ActMode::kSeed : agent::ActMode::kTrain;
        const auto action = agent.act(ts.observation, st.frames, mode);
        ts = env->step(action);
        st.frames += repeat;
        ++st.actor_steps;
        if (st.frames != frame_offset + env->env_frames() || st.frames != st.actor_steps * repeat) {
          throw std::runtime_error("env frame accounting diverged at actor step " + std::to_string(st.actor_steps));
        }
        buffer.add_step(ts.frame, action, ts.reward);
        if (const auto losses = agent.train_step(st.frames, buffer)) {
          st.critic_loss = losses->critic.critic1 + losses->critic.critic2;
          st.actor_loss = losses->actor;
        }
        if (st.frames % config.eval_every_frames == 0) {
          auto eval_env = envs::make_env(config.env);
          const Policy policy = [&](std::span<const std::uint8_t> o) {
            return agent.act(o, st.frames, agent::ActMode::kEval);
          };
          const auto eval = evaluate(policy, *eval_env, config.eval_episodes, derive_seed(seed, 2, st.frames));
          MetricRow row;
          row.env_frame = st.frames;
          row.wall_clock_s = st.elapsed_s + elapsed();
          row.episode_return = eval.mean;
          row.fps = static_cast<double>(st.frames - frame_offset) / std::max(elapsed(), 1e-9);
          row.critic_loss = st.critic_loss;
          row.actor_loss = st.actor_loss;
          row.sigma = agent.stddev(st.frames);
          writer.append(row);
          result.rows.push_back(row);
          if (options.on_row) options.on_row(row);
        }
        if (options.halt_at_frame && st.frames >= *options.halt_at_frame) return finish(true);
        if (st.frames >= config.total_env_frames) break;
      }
      if (!ts.last) break;
      buffer.end_episode();
      ++st.episodes;
      if (config.checkpoint_every_episodes > 0 && st.episodes % config.checkpoint_every_episodes == 0 &&
          st.frames < config.total_env_frames) {
        const double session = elapsed();
        LoopState snapshot = st;
        snapshot.elapsed_s = st.elapsed_s + session;
        checkpointer.save(agent, buffer, snapshot);
      }
    }
    agent.save(result.final_checkpoint);
  } catch (const NumericsError& e) {
    try {
      agent.save(result.run_dir / "diagnostic.ckpt");
      json j;
      j["error"] = e.what();
      j["env_frame"] = st.frames;
      j["actor_steps"] = st.actor_steps;
      j["updates"] = agent.update_count();
      j["sigma"] = agent.stddev(st.frames);
      write_text_atomic(result.run_dir / "diagnostic.json", j.dump(2) + "\n");
    } catch (...) {
    }
    throw;
  }
  return finish(false);
}

}  // namespace drq::harness
