#include "drq/nn/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "drq/core/error.hpp"

namespace drq::nn {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)), values_(shape_size(shape_), fill) {
  for (auto d : shape_) require(d > 0, "Tensor: extents must be positive, got " + shape_string(shape_));
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), values_(std::move(values)) {
  for (auto d : shape_) require(d > 0, "Tensor: extents must be positive, got " + shape_string(shape_));
  require(shape_size(shape_) == values_.size(),
          "Tensor: shape " + shape_string(shape_) + " does not match " + std::to_string(values_.size()) +
              " values");
}

template <typename T>
std::span<T> Tensor<T>::grad() {
  if (grad_.size() != values_.size()) grad_.assign(values_.size(), T(0));
  return grad_;
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (grad_.size() == values_.size()) {
    std::fill(grad_.begin(), grad_.end(), T(0));
  } else {
    grad_.assign(values_.size(), T(0));
  }
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  require(shape_size(shape) == values_.size(),
          "reshape: " + shape_string(shape_) + " -> " + shape_string(shape) + " changes element count");
  return Tensor<T>(std::move(shape), values_);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace drq::nn
