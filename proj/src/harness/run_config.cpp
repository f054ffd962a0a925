#include "drq/harness/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "drq/core/bytes.hpp"
#include "drq/core/error.hpp"
#include "drq/envs/registry.hpp"

namespace drq::harness {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  const auto r = std::from_chars(value.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto r = std::from_chars(value.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) throw ConfigError(key + ": expected a number, got '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

std::vector<std::uint64_t> parse_seeds(const std::string& key, const std::string& value) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) seeds.push_back(parse_u64(key, trim(item)));
  if (seeds.empty()) throw ConfigError(key + ": expected a comma-separated list of seeds");
  return seeds;
}

const std::string kPhysicsPrefix = "env.physics.";

}  // namespace

RunConfig::RunConfig() {
  env.episode_steps = 500;
  agent.schedule = agent::NoiseSchedule::linear(1.0, 0.1, 100'000);
}

replay::BufferConfig RunConfig::buffer() const {
  replay::BufferConfig b;
  b.capacity = buffer_capacity;
  b.n = agent.nstep;
  b.gamma = agent.gamma;
  b.frame_stack = env.frame_stack;
  return b;
}

KeyValues to_key_values(const RunConfig& c) {
  std::string seeds;
  for (auto s : c.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
  KeyValues kv = {
      {"env.task", c.env.task},
      {"env.render_size", std::to_string(c.env.render_size)},
      {"env.frame_stack", std::to_string(c.env.frame_stack)},
      {"env.action_repeat", std::to_string(c.env.action_repeat)},
      {"env.episode_steps", std::to_string(c.env.episode_steps)},
      {"env.dt", fmt_double(c.env.dt)},
      {"env.dump_frames_dir", c.env.dump_frames_dir.string()},
  };
  for (const auto& [k, v] : c.env.physics) kv.emplace_back(kPhysicsPrefix + k, fmt_double(v));
  const KeyValues rest = {
      {"agent.batch_size", std::to_string(c.agent.batch_size)},
      {"agent.lr", fmt_double(c.agent.lr)},
      {"agent.gamma", fmt_double(c.agent.gamma)},
      {"agent.tau", fmt_double(c.agent.tau)},
      {"agent.nstep", std::to_string(c.agent.nstep)},
      {"agent.noise_clip", fmt_double(c.agent.noise_clip)},
      {"agent.update_every", std::to_string(c.agent.update_every)},
      {"agent.seed_frames", std::to_string(c.agent.seed_frames)},
      {"agent.exploration_actor_steps", std::to_string(c.agent.exploration_actor_steps)},
      {"agent.schedule", c.agent.schedule.to_string()},
      {"agent.features_dim", std::to_string(c.agent.features_dim)},
      {"agent.hidden_dim", std::to_string(c.agent.hidden_dim)},
      {"agent.filters", std::to_string(c.agent.filters)},
      {"agent.aug_pad", std::to_string(c.agent.aug_pad)},
      {"buffer.capacity", std::to_string(c.buffer_capacity)},
      {"run.total_env_frames", std::to_string(c.total_env_frames)},
      {"run.eval_every_frames", std::to_string(c.eval_every_frames)},
      {"run.eval_episodes", std::to_string(c.eval_episodes)},
      {"run.seeds", seeds},
      {"run.out_dir", c.out_dir.string()},
      {"run.reproducible", c.reproducible ? "true" : "false"},
      {"run.threads", std::to_string(c.threads)},
      {"run.checkpoint_every_episodes", std::to_string(c.checkpoint_every_episodes)},
      {"run.log_updates", c.log_updates ? "true" : "false"},
  };
  kv.insert(kv.end(), rest.begin(), rest.end());
  return kv;
}

void apply(RunConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  const auto u = [&] { return parse_u64(key, v); };
  const auto d = [&] { return parse_double(key, v); };
  if (key == "env.task") c.env.task = v;
  else if (key == "env.render_size") c.env.render_size = u();
  else if (key == "env.frame_stack") c.env.frame_stack = u();
  else if (key == "env.action_repeat") c.env.action_repeat = u();
  else if (key == "env.episode_steps") c.env.episode_steps = u();
  else if (key == "env.dt") c.env.dt = d();
  else if (key == "env.dump_frames_dir") c.env.dump_frames_dir = v;
  else if (key.rfind(kPhysicsPrefix, 0) == 0 && key.size() > kPhysicsPrefix.size()) {
    c.env.physics[key.substr(kPhysicsPrefix.size())] = d();
  }
  else if (key == "agent.batch_size") c.agent.batch_size = u();
  else if (key == "agent.lr") c.agent.lr = d();
  else if (key == "agent.gamma") c.agent.gamma = d();
  else if (key == "agent.tau") c.agent.tau = d();
  else if (key == "agent.nstep") c.agent.nstep = u();
  else if (key == "agent.noise_clip") c.agent.noise_clip = d();
  else if (key == "agent.update_every") c.agent.update_every = u();
  else if (key == "agent.seed_frames") c.agent.seed_frames = u();
  else if (key == "agent.exploration_actor_steps") c.agent.exploration_actor_steps = u();
  else if (key == "agent.schedule") c.agent.schedule = agent::NoiseSchedule::parse(v);
  else if (key == "agent.features_dim") c.agent.features_dim = u();
  else if (key == "agent.hidden_dim") c.agent.hidden_dim = u();
  else if (key == "agent.filters") c.agent.filters = u();
  else if (key == "agent.aug_pad") c.agent.aug_pad = u();
  else if (key == "buffer.capacity") c.buffer_capacity = u();
  else if (key == "run.total_env_frames") c.total_env_frames = u();
  else if (key == "run.eval_every_frames") c.eval_every_frames = u();
  else if (key == "run.eval_episodes") c.eval_episodes = u();
  else if (key == "run.seeds") c.seeds = parse_seeds(key, v);
  else if (key == "run.out_dir") c.out_dir = v;
  else if (key == "run.reproducible") c.reproducible = parse_bool(key, v);
  else if (key == "run.threads") c.threads = u();
  else if (key == "run.checkpoint_every_episodes") c.checkpoint_every_episodes = u();
  else if (key == "run.log_updates") c.log_updates = parse_bool(key, v);
  else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig parse_config_text(const std::string& text, RunConfig base, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      apply(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::move(base), path.string());
}

std::string env_var_name(const std::string& key) {
  std::string name = "DRQ_";
  for (char ch : key) name += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return name;
}

void apply_env_overrides(RunConfig& c) {
  std::vector<std::string> keys;
  for (const auto& [k, v] : to_key_values(c)) keys.push_back(k);
  // Physics constants of the selected task are overridable even when the
  // file did not mention them.
  try {
    if (const char* task = std::getenv(env_var_name("env.task").c_str())) c.env.task = trim(task);
    for (const auto& [k, v] : envs::make_task(c.env.task)->params()) keys.push_back(kPhysicsPrefix + k);
  } catch (const ConfigError&) {
  }
  for (const auto& key : keys) {
    if (const char* value = std::getenv(env_var_name(key).c_str())) {
      try {
        apply(c, key, value);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("environment variable ") + env_var_name(key) + ": " + e.what());
      }
    }
  }
}

void validate(const RunConfig& c) {
  envs::validate(c.env);
  agent::validate(c.agent);
  const auto task = envs::make_task(c.env.task);
  const auto known = task->params();
  for (const auto& [k, v] : c.env.physics) {
    if (!known.count(k)) throw ConfigError("env.physics." + k + ": not a parameter of task " + c.env.task);
  }
  if (c.buffer_capacity < 1) throw ConfigError("buffer.capacity must be at least 1");
  const std::size_t actor_steps = c.env.episode_steps / c.env.action_repeat;
  if (c.buffer_capacity < actor_steps) {
    throw ConfigError("buffer.capacity (" + std::to_string(c.buffer_capacity) +
                      ") must hold at least one episode (" + std::to_string(actor_steps) + " transitions)");
  }
  if (c.agent.nstep > actor_steps) {
    throw ConfigError("agent.nstep (" + std::to_string(c.agent.nstep) + ") exceeds the episode length of " +
                      std::to_string(actor_steps) + " actor steps");
  }
  if (c.eval_every_frames == 0 || c.eval_every_frames % c.env.action_repeat != 0) {
    throw ConfigError("run.eval_every_frames must be a positive multiple of env.action_repeat");
  }
  if (c.total_env_frames < c.agent.seed_frames) {
    throw ConfigError("run.total_env_frames (" + std::to_string(c.total_env_frames) +
                      ") must be at least agent.seed_frames (" + std::to_string(c.agent.seed_frames) + ")");
  }
  if (c.total_env_frames % c.env.action_repeat != 0) {
    throw ConfigError("run.total_env_frames must be a multiple of env.action_repeat");
  }
  if (c.eval_episodes < 1) throw ConfigError("run.eval_episodes must be at least 1");
  if (c.seeds.empty()) throw ConfigError("run.seeds must list at least one seed");
}

std::string to_config_text(const RunConfig& c) {
  std::string out;
  for (const auto& [k, v] : to_key_values(c)) out += k + " = " + v + "\n";
  return out;
}

std::string config_hash(const RunConfig& c) {
  const std::string text = to_config_text(c);
  const auto h = fnv1a64(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> config_diff(const RunConfig& a, const RunConfig& b) {
  const auto ka = to_key_values(a), kb = to_key_values(b);
  std::vector<std::string> diff;
  for (const auto& [k, v] : ka) {
    const auto it = std::find_if(kb.begin(), kb.end(), [&](const auto& p) { return p.first == k; });
    if (it == kb.end() || it->second != v) diff.push_back(k);
  }
  for (const auto& [k, v] : kb) {
    const auto it = std::find_if(ka.begin(), ka.end(), [&](const auto& p) { return p.first == k; });
    if (it == ka.end()) diff.push_back(k);
  }
  return diff;
}

}  // namespace drq::harness
