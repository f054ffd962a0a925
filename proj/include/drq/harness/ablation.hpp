#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "drq/harness/run_config.hpp"
#include "drq/harness/stats.hpp"

namespace drq::harness {

enum class AblationAxis { kNstep, kBufferCapacity, kNoiseSchedule };

AblationAxis parse_axis(const std::string& name);
std::string axis_name(AblationAxis axis);
// The single config key an axis is allowed to change.
std::string axis_key(AblationAxis axis);

// Base config with one axis value applied, validated. Noise values: "fixed"
// (constant sigma 0.2), "schedule" (the base schedule), "linear(...)" or a
// number. ConfigError for invalid values.
RunConfig ablation_config(const RunConfig& base, AblationAxis axis, const std::string& value);

struct AblationArm {
  std::string value;
  RunConfig config;
  std::vector<std::filesystem::path> metrics;
  std::vector<double> auc;
  std::vector<double> final_return;
  Interval auc_ci;
  Interval final_ci;
};

struct AblationResult {
  AblationAxis axis = AblationAxis::kNstep;
  std::vector<AblationArm> arms;
  std::filesystem::path table_csv;
  std::filesystem::path table_md;
};

// Builds and checks every arm's config first (ConfigError before any run,
// and a ContractViolation if two arms differ in anything but the ablated
// key), then trains one run per (value, seed) with the base seeds shared
// across values and writes ablation_<axis>.csv / .md comparison tables into
// base.out_dir.
AblationResult run_ablation(AblationAxis axis, const std::vector<std::string>& values, const RunConfig& base);

std::string comparison_table_markdown(const AblationResult& result);

}  // namespace drq::harness
