#include "drq/harness/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "drq/core/error.hpp"
#include "drq/core/file.hpp"
#include "drq/harness/stats.hpp"

namespace drq::harness {
namespace {

void push(CurveBand& band, double x, const std::vector<double>& ys) {
  const Interval ci = confidence_interval(ys);
  band.x.push_back(x);
  band.n.push_back(ci.n);
  band.mean.push_back(ci.mean);
  band.lower.push_back(ci.lower());
  band.upper.push_back(ci.upper());
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

CurveBand band_by_frame(const std::vector<std::vector<MetricRow>>& runs) {
  std::map<std::uint64_t, std::vector<double>> by_frame;
  for (const auto& run : runs) {
    for (const auto& row : run) by_frame[row.env_frame].push_back(row.episode_return);
  }
  CurveBand band;
  for (const auto& [frame, ys] : by_frame) push(band, static_cast<double>(frame), ys);
  return band;
}

CurveBand band_by_wall_clock(const std::vector<std::vector<MetricRow>>& runs) {
  std::size_t longest = 0;
  for (const auto& run : runs) longest = std::max(longest, run.size());
  CurveBand band;
  for (std::size_t k = 0; k < longest; ++k) {
    std::vector<double> xs, ys;
    for (const auto& run : runs) {
      if (k < run.size()) {
        xs.push_back(run[k].wall_clock_s);
        ys.push_back(run[k].episode_return);
      }
    }
    push(band, mean(xs), ys);
  }
  return band;
}

std::string render_svg(const CurveBand& band, const std::string& title, const std::string& x_label,
                       const std::string& y_label) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 60;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!band.x.empty()) {
    x0 = *std::min_element(band.x.begin(), band.x.end());
    x1 = *std::max_element(band.x.begin(), band.x.end());
    y0 = std::min(0.0, *std::min_element(band.lower.begin(), band.lower.end()));
    y1 = *std::max_element(band.upper.begin(), band.upper.end());
  }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  const auto sy = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title)
      << "</text>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    svg << "<text x=\"" << num(sx(xv)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
        << num(xv) << "</text>\n";
    svg << "<text x=\"" << L - 6 << "\" y=\"" << num(sy(yv) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
        << num(yv) << "</text>\n";
  }
  svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\" font-size=\"13\">"
      << escape(x_label) << "</text>\n";
  svg << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << (T + H - B) / 2 << ")\">" << escape(y_label) << "</text>\n";
  if (!band.x.empty()) {
    svg << "<polygon fill=\"#1f77b4\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < band.x.size(); ++i) svg << num(sx(band.x[i])) << ',' << num(sy(band.upper[i])) << ' ';
    for (std::size_t i = band.x.size(); i-- > 0;) svg << num(sx(band.x[i])) << ',' << num(sy(band.lower[i])) << ' ';
    svg << "\"/>\n<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < band.x.size(); ++i) svg << num(sx(band.x[i])) << ',' << num(sy(band.mean[i])) << ' ';
    svg << "\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string band_csv(const CurveBand& band) {
  std::string out = "x,n,mean,lower,upper\n";
  char buf[160];
  for (std::size_t i = 0; i < band.x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g,%.17g\n", band.x[i], band.n[i], band.mean[i], band.lower[i],
                  band.upper[i]);
    out += buf;
  }
  return out;
}

PlotOutputs plot(const std::vector<std::filesystem::path>& metrics_files, const std::filesystem::path& out_dir,
                 const std::string& title) {
  require(!metrics_files.empty(), "plot: need at least one metrics file");
  std::vector<std::vector<MetricRow>> runs;
  for (const auto& f : metrics_files) runs.push_back(read_metrics(f));
  std::filesystem::create_directories(out_dir);
  PlotOutputs out{out_dir / "return_vs_frames.svg", out_dir / "return_vs_wall_clock.svg",
                  out_dir / "return_vs_frames.csv", out_dir / "return_vs_wall_clock.csv"};
  const CurveBand frames = band_by_frame(runs);
  const CurveBand wall = band_by_wall_clock(runs);
  write_text(out.frames_svg, render_svg(frames, title, "environment frames", "episode return"));
  write_text(out.wall_clock_svg, render_svg(wall, title, "wall clock (s)", "episode return"));
  write_text(out.frames_csv, band_csv(frames));
  write_text(out.wall_clock_csv, band_csv(wall));
  return out;
}

}  // namespace drq::harness
