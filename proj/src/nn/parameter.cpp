#include "drq/nn/parameter.hpp"

#include <cmath>
#include <cstring>

#include "drq/core/error.hpp"
#include "drq/kernels/kernels.hpp"

namespace drq::nn {

template <typename T>
Parameter<T>::Parameter(std::string name_, Tensor<T> tensor_)
    : name(std::move(name_)),
      tensor(std::move(tensor_)),
      adam_m(tensor.size(), T(0)),
      adam_v(tensor.size(), T(0)) {}

template <typename T>
void adam_step(Parameter<T>& param, const AdamConfig& config) {
  require(param.tensor.has_grad(), "adam_step: parameter '" + param.name + "' has no gradient");
  const auto grad = param.tensor.grad();
  for (const T g : grad) {
    require(std::isfinite(static_cast<double>(g)),
            "adam_step: non-finite gradient in '" + param.name + "'");
  }
  if (param.adam_m.size() != param.tensor.size()) param.adam_m.assign(param.tensor.size(), T(0));
  if (param.adam_v.size() != param.tensor.size()) param.adam_v.assign(param.tensor.size(), T(0));
  param.step_count += 1;
  const auto step = static_cast<double>(param.step_count);
  const kernels::AdamCoeffs coeffs{
      config.lr,
      config.beta1,
      config.beta2,
      config.eps,
      1.0 - std::pow(config.beta1, step),
      1.0 - std::pow(config.beta2, step),
  };
  kernels::adam_update(param.tensor.values(), std::span<const T>(grad), std::span<T>(param.adam_m),
                       std::span<T>(param.adam_v), coeffs);
}

template <typename T>
void polyak_update(Tensor<T>& target, const Tensor<T>& online, double tau) {
  require(tau >= 0.0 && tau <= 1.0, "polyak_update: tau must lie in [0, 1], got " + std::to_string(tau));
  require(target.shape() == online.shape(), "polyak_update: shape " + shape_string(target.shape()) +
                                                " vs " + shape_string(online.shape()));
  if (tau == 1.0) {
    std::copy(online.values().begin(), online.values().end(), target.values().begin());
    return;
  }
  kernels::polyak_update(target.values(), online.values(), static_cast<T>(tau));
}

template <typename T>
std::size_t ParameterSet<T>::add(std::string name, Shape shape) {
  params_.emplace_back(std::move(name), Tensor<T>(std::move(shape)));
  return params_.size() - 1;
}

template <typename T>
Parameter<T>* ParameterSet<T>::find(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

template <typename T>
void ParameterSet<T>::drop_grad() {
  for (auto& p : params_) p.tensor.drop_grad();
}

template <typename T>
std::size_t ParameterSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

template <typename T>
std::uint64_t weights_hash(const ParameterSet<T>& set) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : set.all()) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.tensor.data());
    const std::size_t n = p.tensor.size() * sizeof(T);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

template struct Parameter<float>;
template struct Parameter<double>;
template class ParameterSet<float>;
template class ParameterSet<double>;
template void adam_step<float>(Parameter<float>&, const AdamConfig&);
template void adam_step<double>(Parameter<double>&, const AdamConfig&);
template void polyak_update<float>(Tensor<float>&, const Tensor<float>&, double);
template void polyak_update<double>(Tensor<double>&, const Tensor<double>&, double);
template std::uint64_t weights_hash<float>(const ParameterSet<float>&);
template std::uint64_t weights_hash<double>(const ParameterSet<double>&);

}  // namespace drq::nn
