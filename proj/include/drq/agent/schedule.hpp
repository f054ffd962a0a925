#pragma once

#include <cstdint>
#include <string>

namespace drq::agent {

// Exploration stddev as a function of the environment-step counter: linear
// decay from sigma_init to sigma_final over `horizon` steps, then constant.
// A fixed schedule has sigma_init == sigma_final.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  static NoiseSchedule linear(double sigma_init, double sigma_final, std::uint64_t horizon);
  static NoiseSchedule fixed(double sigma);
  // Accepts "linear(init,final,horizon)" or a bare number (fixed).
  static NoiseSchedule parse(const std::string& text);

  double operator()(std::uint64_t t) const;

  double sigma_init() const { return init_; }
  double sigma_final() const { return final_; }
  std::uint64_t horizon() const { return horizon_; }
  bool is_fixed() const { return fixed_; }
  std::string to_string() const;

  bool operator==(const NoiseSchedule&) const = default;

 private:
  double init_ = 1.0;
  double final_ = 0.1;
  std::uint64_t horizon_ = 500'000;
  bool fixed_ = false;
};

}  // namespace drq::agent
