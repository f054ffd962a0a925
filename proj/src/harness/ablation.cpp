#include "drq/harness/ablation.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "drq/core/error.hpp"
#include "drq/core/file.hpp"
#include "drq/harness/training.hpp"

namespace drq::harness {
namespace {

std::string dir_safe(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '.' ? c : '_';
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

AblationAxis parse_axis(const std::string& name) {
  if (name == "nstep") return AblationAxis::kNstep;
  if (name == "buffer_capacity") return AblationAxis::kBufferCapacity;
  if (name == "noise_schedule") return AblationAxis::kNoiseSchedule;
  throw ConfigError("unknown ablation axis '" + name + "' (nstep, buffer_capacity, noise_schedule)");
}

std::string axis_name(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::kNstep: return "nstep";
    case AblationAxis::kBufferCapacity: return "buffer_capacity";
    case AblationAxis::kNoiseSchedule: return "noise_schedule";
  }
  return "?";
}

std::string axis_key(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::kNstep: return "agent.nstep";
    case AblationAxis::kBufferCapacity: return "buffer.capacity";
    case AblationAxis::kNoiseSchedule: return "agent.schedule";
  }
  return "?";
}

RunConfig ablation_config(const RunConfig& base, AblationAxis axis, const std::string& value) {
  RunConfig c = base;
  const std::string where = "ablation " + axis_name(axis) + " value '" + value + "': ";
  try {
    if (axis == AblationAxis::kNoiseSchedule) {
      if (value == "fixed") {
        c.agent.schedule = agent::NoiseSchedule::fixed(0.2);
      } else if (value != "schedule") {
        c.agent.schedule = agent::NoiseSchedule::parse(value);
      }
    } else {
      apply(c, axis_key(axis), value);
      if (axis == AblationAxis::kNstep && c.agent.nstep == 0) throw ConfigError("n must be at least 1");
    }
    c.out_dir = base.out_dir / (axis_name(axis) + "_" + dir_safe(value));
    validate(c);
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  }
  return c;
}

AblationResult run_ablation(AblationAxis axis, const std::vector<std::string>& values, const RunConfig& base) {
  if (values.empty()) throw ConfigError("ablation needs at least one value");
  AblationResult result;
  result.axis = axis;
  for (const auto& v : values) {
    AblationArm arm;
    arm.value = v;
    arm.config = ablation_config(base, axis, v);
    result.arms.push_back(std::move(arm));
  }
  const std::vector<std::string> allowed = {axis_key(axis), "run.out_dir"};
  for (std::size_t i = 1; i < result.arms.size(); ++i) {
    for (const auto& key : config_diff(result.arms[0].config, result.arms[i].config)) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        contract_failure("ablation arms '" + result.arms[0].value + "' and '" + result.arms[i].value +
                         "' differ in " + key + ", not only in " + axis_key(axis));
      }
    }
  }

  for (auto& arm : result.arms) {
    for (const auto seed : base.seeds) {
      const TrainingResult r = run_training(arm.config, seed);
      const auto rows = read_metrics(r.metrics_path);
      arm.metrics.push_back(r.metrics_path);
      arm.auc.push_back(rows.empty() ? 0.0 : area_under_curve(rows));
      arm.final_return.push_back(rows.empty() ? 0.0 : rows.back().episode_return);
    }
    arm.auc_ci = confidence_interval(arm.auc);
    arm.final_ci = confidence_interval(arm.final_return);
  }

  std::filesystem::create_directories(base.out_dir);
  result.table_csv = base.out_dir / ("ablation_" + axis_name(axis) + ".csv");
  result.table_md = base.out_dir / ("ablation_" + axis_name(axis) + ".md");
  std::string csv = "value,seeds,auc_mean,auc_ci95,final_mean,final_ci95\n";
  for (const auto& arm : result.arms) {
    csv += arm.value + "," + std::to_string(arm.auc.size()) + "," + num(arm.auc_ci.mean) + "," +
           num(arm.auc_ci.half_width) + "," + num(arm.final_ci.mean) + "," + num(arm.final_ci.half_width) + "\n";
  }
  write_text(result.table_csv, csv);
  write_text(result.table_md, comparison_table_markdown(result));
  return result;
}

std::string comparison_table_markdown(const AblationResult& result) {
  std::string md = "| " + axis_name(result.axis) + " | seeds | AUC (mean ± 95% CI) | final return (mean ± 95% CI) |\n";
  md += "|---|---|---|---|\n";
  for (const auto& arm : result.arms) {
    md += "| " + arm.value + " | " + std::to_string(arm.auc.size()) + " | " + num(arm.auc_ci.mean) + " ± " +
          num(arm.auc_ci.half_width) + " | " + num(arm.final_ci.mean) + " ± " + num(arm.final_ci.half_width) + " |\n";
  }
  return md;
}

}  // namespace drq::harness
