#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace drq::envs {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

// Planar RGB canvas (channel-major, 3 x size x size) with flat-shaded,
// non-antialiased primitives. Coordinates are in pixels; pixel (row i,
// column j) is covered when its centre (j + 0.5, i + 0.5) lies inside.
class Canvas {
 public:
  explicit Canvas(std::size_t size);

  std::size_t size() const { return size_; }
  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::vector<std::uint8_t> take() { return std::move(pixels_); }

  void fill(Rgb c);
  void rect(double x0, double y0, double x1, double y1, Rgb c);
  void circle(double cx, double cy, double radius, Rgb c);
  // Capsule of the given half-width around the segment (x0,y0)-(x1,y1).
  void segment(double x0, double y0, double x1, double y1, double half_width, Rgb c);

 private:
  void put(std::size_t i, std::size_t j, Rgb c);
  std::size_t size_;
  std::vector<std::uint8_t> pixels_;
};

// Binary PPM (P6) of a planar RGB frame.
void write_ppm(const std::filesystem::path& path, std::span<const std::uint8_t> planar_rgb, std::size_t height,
               std::size_t width);

}  // namespace drq::envs
