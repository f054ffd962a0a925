#include "drq/harness/stats.hpp"

#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "drq/core/error.hpp"

namespace drq::harness {

double mean(std::span<const double> v) {
  require(!v.empty(), "mean of an empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double t_critical(std::size_t df, double confidence) {
  require(df >= 1, "t_critical needs at least one degree of freedom");
  require(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0, 1)");
  const boost::math::students_t dist(static_cast<double>(df));
  return boost::math::quantile(dist, 0.5 + 0.5 * confidence);
}

Interval confidence_interval(std::span<const double> values, double confidence) {
  Interval ci;
  ci.n = values.size();
  ci.mean = mean(values);
  if (values.size() >= 2) {
    const double se = sample_stddev(values) / std::sqrt(static_cast<double>(values.size()));
    ci.half_width = t_critical(values.size() - 1, confidence) * se;
  }
  return ci;
}

double area_under_curve(const std::vector<MetricRow>& rows) {
  require(!rows.empty(), "area_under_curve: no rows");
  if (rows.size() == 1) return rows.front().episode_return;
  double area = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double dx = static_cast<double>(rows[i].env_frame - rows[i - 1].env_frame);
    area += 0.5 * dx * (rows[i].episode_return + rows[i - 1].episode_return);
  }
  const double span = static_cast<double>(rows.back().env_frame - rows.front().env_frame);
  return span > 0.0 ? area / span : rows.back().episode_return;
}

}  // namespace drq::harness
