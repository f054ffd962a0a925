#include "drq/envs/raster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drq/core/error.hpp"
#include "drq/core/file.hpp"

namespace drq::envs {
namespace {

// Pixel index range whose centres can fall inside [lo, hi].
std::pair<std::size_t, std::size_t> cover(double lo, double hi, std::size_t n) {
  const double a = std::ceil(lo - 0.5);
  const double b = std::floor(hi - 0.5);
  const double first = std::max(a, 0.0);
  const double last = std::min(b, static_cast<double>(n) - 1.0);
  if (last < first) return {1, 0};
  return {static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
}

}  // namespace

Canvas::Canvas(std::size_t size) : size_(size), pixels_(3 * size * size, 0) {
  require(size >= 1, "canvas size must be positive");
}

void Canvas::put(std::size_t i, std::size_t j, Rgb c) {
  const std::size_t plane = size_ * size_;
  const std::size_t p = i * size_ + j;
  pixels_[p] = c.r;
  pixels_[plane + p] = c.g;
  pixels_[2 * plane + p] = c.b;
}

void Canvas::fill(Rgb c) {
  const std::size_t plane = size_ * size_;
  std::fill_n(pixels_.begin(), plane, c.r);
  std::fill_n(pixels_.begin() + plane, plane, c.g);
  std::fill_n(pixels_.begin() + 2 * plane, plane, c.b);
}

void Canvas::rect(double x0, double y0, double x1, double y1, Rgb c) {
  const auto [i0, i1] = cover(std::min(y0, y1), std::max(y0, y1), size_);
  const auto [j0, j1] = cover(std::min(x0, x1), std::max(x0, x1), size_);
  for (std::size_t i = i0; i <= i1 && i0 <= i1; ++i) {
    for (std::size_t j = j0; j <= j1 && j0 <= j1; ++j) put(i, j, c);
  }
}

void Canvas::circle(double cx, double cy, double radius, Rgb c) {
  const auto [i0, i1] = cover(cy - radius, cy + radius, size_);
  const auto [j0, j1] = cover(cx - radius, cx + radius, size_);
  for (std::size_t i = i0; i <= i1 && i0 <= i1; ++i) {
    for (std::size_t j = j0; j <= j1 && j0 <= j1; ++j) {
      const double dx = static_cast<double>(j) + 0.5 - cx;
      const double dy = static_cast<double>(i) + 0.5 - cy;
      if (dx * dx + dy * dy <= radius * radius) put(i, j, c);
    }
  }
}

void Canvas::segment(double x0, double y0, double x1, double y1, double half_width, Rgb c) {
  const auto [i0, i1] = cover(std::min(y0, y1) - half_width, std::max(y0, y1) + half_width, size_);
  const auto [j0, j1] = cover(std::min(x0, x1) - half_width, std::max(x0, x1) + half_width, size_);
  const double vx = x1 - x0, vy = y1 - y0;
  const double len2 = vx * vx + vy * vy;
  for (std::size_t i = i0; i <= i1 && i0 <= i1; ++i) {
    for (std::size_t j = j0; j <= j1 && j0 <= j1; ++j) {
      const double px = static_cast<double>(j) + 0.5 - x0;
      const double py = static_cast<double>(i) + 0.5 - y0;
      const double s = len2 > 0.0 ? std::clamp((px * vx + py * vy) / len2, 0.0, 1.0) : 0.0;
      const double dx = px - s * vx, dy = py - s * vy;
      if (dx * dx + dy * dy <= half_width * half_width) put(i, j, c);
    }
  }
}

void write_ppm(const std::filesystem::path& path, std::span<const std::uint8_t> planar_rgb, std::size_t height,
               std::size_t width) {
  const std::size_t plane = height * width;
  require(planar_rgb.size() == 3 * plane, "write_ppm: buffer is not 3 x height x width");
  const std::string header = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + 3 * plane);
  for (std::size_t p = 0; p < plane; ++p) {
    out.push_back(planar_rgb[p]);
    out.push_back(planar_rgb[plane + p]);
    out.push_back(planar_rgb[2 * plane + p]);
  }
  write_file_atomic(path, out);
}

}  // namespace drq::envs
