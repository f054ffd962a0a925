#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "drq/harness/metrics.hpp"
#include "drq/harness/run_config.hpp"

namespace drq::harness {

struct TrainingOptions {
  // Continue from <run dir>/state when a resume point exists.
  bool resume = false;
  // Stop abruptly once this many env frames are reached, without a final
  // checkpoint (simulates a killed process).
  std::optional<std::uint64_t> halt_at_frame;
  std::function<void(const MetricRow&)> on_row;
};

struct TrainingResult {
  std::filesystem::path run_dir;
  std::filesystem::path metrics_path;
  std::filesystem::path final_checkpoint;
  std::uint64_t env_frames = 0;
  std::uint64_t actor_steps = 0;
  std::uint64_t updates = 0;
  std::uint64_t episodes = 0;
  bool halted = false;
  bool resumed = false;
  double elapsed_s = 0.0;
  std::vector<MetricRow> rows;  // rows written by this call
};

// <out_dir>/seed_<seed>
std::filesystem::path run_dir(const RunConfig& config, std::uint64_t seed);

// Interaction and learning loop: act, step, store, update; an evaluation row
// every eval_every_frames env frames; final checkpoint at the end. Writes
// metrics.csv, metrics.json (resolved config, hash, hardware) and final.ckpt
// under run_dir(). A NumericsError leaves diagnostic.ckpt and diagnostic.json
// behind before propagating.
TrainingResult run_training(const RunConfig& config, std::uint64_t seed, const TrainingOptions& options = {});

}  // namespace drq::harness
