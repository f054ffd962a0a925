#include "drq/harness/metrics.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <utility>

#include "drq/core/error.hpp"

namespace drq::harness {
namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, const char* column, bool allow_empty) {
  if (cell.empty()) {
    if (allow_empty) return std::nan("");
    throw FormatError("metrics row " + std::to_string(row) + ": empty " + column);
  }
  double v = 0.0;
  const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (r.ec != std::errc() || r.ptr != cell.data() + cell.size()) {
    throw FormatError("metrics row " + std::to_string(row) + ": bad " + column + " value '" + cell + "'");
  }
  return v;
}

}  // namespace

std::string format_row(const MetricRow& r) {
  return std::to_string(r.env_frame) + "," + fmt(r.wall_clock_s) + "," + fmt(r.episode_return) + "," + fmt(r.fps) +
         "," + fmt(r.critic_loss) + "," + fmt(r.actor_loss) + "," + fmt(r.sigma);
}

MetricRow parse_row(const std::string& line, std::size_t row_number) {
  const auto cells = split(line);
  if (cells.size() != 7) {
    throw FormatError("metrics row " + std::to_string(row_number) + ": expected 7 columns, found " +
                      std::to_string(cells.size()));
  }
  MetricRow r;
  std::uint64_t frame = 0;
  const auto& c0 = cells[0];
  const auto res = std::from_chars(c0.data(), c0.data() + c0.size(), frame);
  if (c0.empty() || res.ec != std::errc() || res.ptr != c0.data() + c0.size()) {
    throw FormatError("metrics row " + std::to_string(row_number) + ": bad env_frame value '" + c0 + "'");
  }
  r.env_frame = frame;
  r.wall_clock_s = parse_cell(cells[1], row_number, "wall_clock_s", false);
  r.episode_return = parse_cell(cells[2], row_number, "episode_return", false);
  r.fps = parse_cell(cells[3], row_number, "fps", false);
  r.critic_loss = parse_cell(cells[4], row_number, "critic_loss", true);
  r.actor_loss = parse_cell(cells[5], row_number, "actor_loss", true);
  r.sigma = parse_cell(cells[6], row_number, "sigma", false);
  return r;
}

std::vector<MetricRow> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open metrics file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw FormatError(path.string() + ": missing or unexpected header row");
  }
  std::vector<MetricRow> rows;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      rows.push_back(parse_row(line, n));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
  return rows;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, bool resume, std::uint64_t keep_through_frame)
    : path_(path) {
  std::vector<std::string> kept;
  if (resume && std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      MetricRow row;
      try {
        row = parse_row(line, n);
      } catch (const FormatError&) {
        break;  // torn final row from an abrupt stop
      }
      if (row.env_frame > keep_through_frame) break;
      kept.push_back(line);
      last_frame_ = row.env_frame;
      any_ = true;
    }
  }
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot open metrics file " + path.string() + " for writing");
  out_ << kMetricsHeader << '\n';
  for (const auto& l : kept) out_ << l << '\n';
  out_.flush();
}

void MetricsWriter::append(const MetricRow& row) {
  if (any_ && row.env_frame < last_frame_) {
    contract_failure("metrics env_frame went backwards: " + std::to_string(row.env_frame) + " after " +
                     std::to_string(last_frame_));
  }
  for (double v : {row.wall_clock_s, row.episode_return, row.fps, row.sigma}) {
    if (!std::isfinite(v)) throw NumericsError("non-finite metric in row at env_frame " + std::to_string(row.env_frame));
  }
  out_ << format_row(row) << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("write to " + path_.string() + " failed");
  last_frame_ = row.env_frame;
  any_ = true;
}

std::string strip_wall_clock(const std::string& csv_text) {
  std::stringstream in(csv_text);
  std::string line, out;
  bool header = true;
  while (std::getline(in, line)) {
    if (std::exchange(header, false)) {
      out += line + '\n';
      continue;
    }
    auto cells = split(line);
    for (int c : kWallClockColumns) {
      if (static_cast<std::size_t>(c) < cells.size()) cells[static_cast<std::size_t>(c)].clear();
    }
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += '\n';
  }
  return out;
}

}  // namespace drq::harness
