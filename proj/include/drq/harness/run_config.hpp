#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "drq/agent/drqv2.hpp"
#include "drq/envs/pixel_env.hpp"
#include "drq/replay/replay_buffer.hpp"

namespace drq::harness {

// Everything one training run needs. Defaults are the desk-scale budget.
struct RunConfig {
  envs::EnvConfig env;
  agent::AgentConfig agent;
  std::size_t buffer_capacity = 1'000'000;
  std::uint64_t total_env_frames = 100'000;
  std::uint64_t eval_every_frames = 20'000;
  std::size_t eval_episodes = 10;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path out_dir = "runs/default";
  bool reproducible = false;
  std::size_t threads = 0;  // 0 = hardware concurrency
  // Resume state is written at every k-th episode boundary (0 disables).
  std::size_t checkpoint_every_episodes = 20;
  // Per-update diagnostics (losses, sigma, Q means) to updates.csv.
  bool log_updates = false;

  RunConfig();

  replay::BufferConfig buffer() const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Flat key/value view of a config, in a fixed key order. Round-trips through
// apply().
KeyValues to_key_values(const RunConfig& config);
// Sets one key from its textual value; ConfigError for unknown keys or
// unparseable values.
void apply(RunConfig& config, const std::string& key, const std::string& value);

// "key = value" lines, '#' starts a comment.
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});
RunConfig parse_config_text(const std::string& text, RunConfig base = {}, const std::string& origin = "<text>");

// For every known key k, an environment variable named DRQ_ + k upper-cased
// with '.' mapped to '_' overrides it (e.g. agent.batch_size ->
// DRQ_AGENT_BATCH_SIZE).
std::string env_var_name(const std::string& key);
void apply_env_overrides(RunConfig& config);

// Cross-field checks; ConfigError naming the offending key.
void validate(const RunConfig& config);

std::string to_config_text(const RunConfig& config);
// FNV-1a of to_config_text, hex.
std::string config_hash(const RunConfig& config);

// Keys whose values differ.
std::vector<std::string> config_diff(const RunConfig& a, const RunConfig& b);

}  // namespace drq::harness
