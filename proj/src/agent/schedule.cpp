#include "drq/agent/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <charconv>

#include "drq/core/error.hpp"

namespace drq::agent {

NoiseSchedule NoiseSchedule::linear(double sigma_init, double sigma_final, std::uint64_t horizon) {
  if (!(sigma_init >= 0.0) || !(sigma_final >= 0.0)) throw ConfigError("noise stddev must be non-negative");
  if (sigma_final > sigma_init) throw ConfigError("noise schedule must not increase");
  if (horizon == 0) throw ConfigError("noise schedule horizon must be positive");
  NoiseSchedule s;
  s.init_ = sigma_init;
  s.final_ = sigma_final;
  s.horizon_ = horizon;
  s.fixed_ = false;
  return s;
}

NoiseSchedule NoiseSchedule::fixed(double sigma) {
  if (!(sigma >= 0.0)) throw ConfigError("noise stddev must be non-negative");
  NoiseSchedule s;
  s.init_ = sigma;
  s.final_ = sigma;
  s.horizon_ = 1;
  s.fixed_ = true;
  return s;
}

NoiseSchedule NoiseSchedule::parse(const std::string& text) {
  static const std::regex linear_re(
      R"(\s*linear\(\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*,\s*([0-9]+)\s*\)\s*)");
  std::smatch m;
  try {
    if (std::regex_match(text, m, linear_re)) {
      return linear(std::stod(m[1]), std::stod(m[2]), std::stoull(m[3]));
    }
    std::size_t used = 0;
    const double sigma = std::stod(text, &used);
    if (text.find_first_not_of(" \t", used) == std::string::npos) return fixed(sigma);
  } catch (const std::logic_error&) {
  }
  throw ConfigError("cannot parse noise schedule '" + text + "' (expected linear(init,final,T) or a number)");
}

double NoiseSchedule::operator()(std::uint64_t t) const {
  if (fixed_) return init_;
  // Written as a convex combination so both endpoints are exact.
  const double f = std::min(static_cast<double>(t) / static_cast<double>(horizon_), 1.0);
  return init_ * (1.0 - f) + final_ * f;
}

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string NoiseSchedule::to_string() const {
  if (fixed_) return shortest(init_);
  return "linear(" + shortest(init_) + "," + shortest(final_) + "," + std::to_string(horizon_) + ")";
}

}  // namespace drq::agent
