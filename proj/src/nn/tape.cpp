#include "drq/nn/tape.hpp"

#include <algorithm>
#include <utility>

#include "drq/core/error.hpp"

namespace drq::nn {

template <typename T>
auto Tape<T>::node(Var v) const -> const Node& {
  require(v.valid() && v.id < nodes_.size(), "Tape: invalid variable");
  return nodes_[v.id];
}

template <typename T>
auto Tape<T>::node(Var v) -> Node& {
  require(v.valid() && v.id < nodes_.size(), "Tape: invalid variable");
  return nodes_[v.id];
}

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
Var Tape<T>::leaf(Tensor<T> value) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
Var Tape<T>::param(Parameter<T>& p, bool trainable) {
  Node n;
  n.external = &p.tensor;
  n.requires_grad = trainable;
  n.external_grad = trainable;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
  const Node& n = node(v);
  return n.external ? *n.external : n.owned;
}

template <typename T>
bool Tape<T>::requires_grad(Var v) const {
  return node(v).requires_grad;
}

template <typename T>
std::span<const T> Tape<T>::grad(Var v) const {
  const Node& n = node(v);
  if (n.external_grad) return std::as_const(*n.external).grad();
  return n.grad;
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, bool requires_grad, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
std::span<T> Tape<T>::grad_buffer(Var v) {
  Node& n = node(v);
  if (n.external_grad) return n.external->grad();
  if (n.grad.size() != value(v).size()) n.grad.assign(value(v).size(), T(0));
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var output) {
  require(value(output).size() == 1, "backward: output must hold a single element, got shape " +
                                         shape_string(value(output).shape()));
  const T one = T(1);
  backward(output, std::span<const T>(&one, 1));
}

template <typename T>
void Tape<T>::backward(Var output, std::span<const T> seed) {
  require(seed.size() == value(output).size(), "backward: seed size mismatch");
  if (!node(output).requires_grad) return;
  auto g = grad_buffer(output);
  for (std::size_t i = 0; i < seed.size(); ++i) g[i] += seed[i];
  for (std::int64_t i = output.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.backward || n.grad.empty()) continue;
    // Closures may allocate other nodes' gradients but never this one's.
    n.backward(*this, std::span<const T>(n.grad));
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace drq::nn
