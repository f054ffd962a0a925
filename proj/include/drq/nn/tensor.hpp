#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace drq::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array with an optional gradient buffer of the same length.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return values_.size(); }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  bool has_grad() const { return !values_.empty() && grad_.size() == values_.size(); }
  // Allocates a zero gradient if absent.
  std::span<T> grad();
  std::span<const T> grad() const { return grad_; }
  void zero_grad();
  void drop_grad() { grad_ = {}; }

  // Same values, new shape with an equal element count.
  Tensor reshaped(Shape shape) const;

  std::vector<T>& storage() { return values_; }
  const std::vector<T>& storage() const { return values_; }

 private:
  Shape shape_;
  std::vector<T> values_;
  std::vector<T> grad_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace drq::nn
