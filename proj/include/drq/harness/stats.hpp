#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "drq/harness/metrics.hpp"

namespace drq::harness {

double mean(std::span<const double> v);
// Sample standard deviation (n - 1 denominator); 0 for n < 2.
double sample_stddev(std::span<const double> v);
// Two-sided Student-t critical value, e.g. 0.95 -> t_{0.975, df}.
double t_critical(std::size_t df, double confidence = 0.95);

struct Interval {
  std::size_t n = 0;
  double mean = 0.0;
  double half_width = 0.0;  // t-critical * stderr; 0 for a single value
  double lower() const { return mean - half_width; }
  double upper() const { return mean + half_width; }
};

Interval confidence_interval(std::span<const double> values, double confidence = 0.95);

// Trapezoidal area under episode_return vs env_frame, divided by the frame
// span (a time-averaged return). A single row yields its own return.
double area_under_curve(const std::vector<MetricRow>& rows);

}  // namespace drq::harness
