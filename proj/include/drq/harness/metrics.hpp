#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace drq::harness {

// One evaluation row. Loss fields are NaN before the first update and are
// written as empty CSV cells.
struct MetricRow {
  std::uint64_t env_frame = 0;
  double wall_clock_s = 0.0;
  double episode_return = 0.0;
  double fps = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double sigma = 0.0;
};

inline constexpr const char* kMetricsHeader = "env_frame,wall_clock_s,episode_return,fps,critic_loss,actor_loss,sigma";
// Columns derived from wall-clock time; excluded from determinism comparisons.
inline constexpr int kWallClockColumns[] = {1, 3};

std::string format_row(const MetricRow& row);
MetricRow parse_row(const std::string& line, std::size_t row_number);

// Append-only CSV writer. Every row is flushed before append() returns, so
// the file is parseable up to the last completed row after a crash.
class MetricsWriter {
 public:
  // keep_through_frame: when resuming, rows with env_frame above it are
  // dropped and writing continues after the kept prefix.
  MetricsWriter(const std::filesystem::path& path, bool resume, std::uint64_t keep_through_frame = 0);
  void append(const MetricRow& row);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint64_t last_frame_ = 0;
  bool any_ = false;
};

// Parses a metrics CSV; FormatError names the offending row.
std::vector<MetricRow> read_metrics(const std::filesystem::path& path);

// The file with wall-clock columns blanked, for byte comparisons.
std::string strip_wall_clock(const std::string& csv_text);

}  // namespace drq::harness
