#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "drq/nn/parameter.hpp"
#include "drq/nn/tensor.hpp"

namespace drq::nn {

// Handle to a value recorded on a Tape.
struct Var {
  std::uint32_t id = std::numeric_limits<std::uint32_t>::max();
  bool valid() const { return id != std::numeric_limits<std::uint32_t>::max(); }
};

// Reverse-mode autodiff tape, rebuilt for every update step. A node requires
// a gradient iff one of its inputs does; operations on gradient-free inputs
// record no backward closure, which is how stop-gradient and frozen networks
// are expressed.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::span<const T> out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor<T> value);
  // A differentiable input whose gradient stays on the tape (read it with grad()).
  Var leaf(Tensor<T> value);
  // Binds a parameter by reference. Trainable bindings accumulate gradients
  // into param.tensor.grad(); frozen ones behave like constants.
  Var param(Parameter<T>& p, bool trainable);

  const Tensor<T>& value(Var v) const;
  const Shape& shape(Var v) const { return value(v).shape(); }
  bool requires_grad(Var v) const;
  // Gradient accumulated so far; empty when none reached this node.
  std::span<const T> grad(Var v) const;

  // Used by operation implementations.
  Var record(Tensor<T> value, bool requires_grad, BackwardFn backward);
  std::span<T> grad_buffer(Var v);

  // Backpropagates from a single-element output (seed 1).
  void backward(Var output);
  // Backpropagates an arbitrary seed gradient of output's size.
  void backward(Var output, std::span<const T> seed);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> owned;
    Tensor<T>* external = nullptr;
    bool external_grad = false;
    std::vector<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };
  const Node& node(Var v) const;
  Node& node(Var v);

  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace drq::nn
