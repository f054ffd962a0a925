#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "drq/harness/metrics.hpp"

namespace drq::harness {

// Mean curve with a 95% t-interval band across runs (seeds).
struct CurveBand {
  std::vector<double> x;
  std::vector<std::size_t> n;
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
};

// x = env_frame; each frame aggregates the runs that logged it.
CurveBand band_by_frame(const std::vector<std::vector<MetricRow>>& runs);
// x = wall-clock seconds; row k of every run is aggregated, x is the mean
// wall clock of those rows.
CurveBand band_by_wall_clock(const std::vector<std::vector<MetricRow>>& runs);

std::string render_svg(const CurveBand& band, const std::string& title, const std::string& x_label,
                       const std::string& y_label);
std::string band_csv(const CurveBand& band);

struct PlotOutputs {
  std::filesystem::path frames_svg;
  std::filesystem::path wall_clock_svg;
  std::filesystem::path frames_csv;
  std::filesystem::path wall_clock_csv;
};

// Reads every metrics file (FormatError names the bad row) and writes
// return-vs-frames and return-vs-wall-clock plots plus their band data.
PlotOutputs plot(const std::vector<std::filesystem::path>& metrics_files, const std::filesystem::path& out_dir,
                 const std::string& title);

}  // namespace drq::harness
