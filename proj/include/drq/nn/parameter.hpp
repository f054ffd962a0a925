#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drq/nn/tensor.hpp"

namespace drq::nn {

// A trainable tensor plus its Adam moment buffers.
template <typename T>
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor<T> tensor);

  std::string name;
  Tensor<T> tensor;
  std::vector<T> adam_m;
  std::vector<T> adam_v;
  std::uint64_t step_count = 0;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam step. Requires a present, finite gradient; the
// gradient buffer is left as is (callers clear it).
template <typename T>
void adam_step(Parameter<T>& param, const AdamConfig& config);

// target <- (1 - tau) * target + tau * online, elementwise. tau in [0, 1].
template <typename T>
void polyak_update(Tensor<T>& target, const Tensor<T>& online, double tau);

// Ordered, named collection with value semantics: copying a set copies
// every tensor and optimizer state.
template <typename T>
class ParameterSet {
 public:
  std::size_t add(std::string name, Shape shape);

  Parameter<T>& operator[](std::size_t i) { return params_.at(i); }
  const Parameter<T>& operator[](std::size_t i) const { return params_.at(i); }
  std::size_t size() const { return params_.size(); }
  std::span<Parameter<T>> all() { return params_; }
  std::span<const Parameter<T>> all() const { return params_; }
  Parameter<T>* find(std::string_view name);

  void zero_grad();
  void drop_grad();
  std::size_t scalar_count() const;

 private:
  std::vector<Parameter<T>> params_;
};

// FNV-1a over the raw bytes of every value buffer; used to assert that a
// set of weights is bitwise unchanged.
template <typename T>
std::uint64_t weights_hash(const ParameterSet<T>& set);

extern template struct Parameter<float>;
extern template struct Parameter<double>;
extern template class ParameterSet<float>;
extern template class ParameterSet<double>;

}  // namespace drq::nn
