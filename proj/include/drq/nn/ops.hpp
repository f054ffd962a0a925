#pragma once

#include <span>

#include "drq/nn/tape.hpp"

namespace drq::nn {

// Valid 3x3 cross-correlation. x [B,C,H,W], weight [O,C,3,3], bias [O],
// stride 1 or 2. Output [B,O,(H-3)/stride+1,(W-3)/stride+1].
template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var weight, Var bias, std::size_t stride);

// x [B,I], weight [O,I], bias [O] -> x * weight^T + bias, shape [B,O].
template <typename T>
Var linear(Tape<T>& tape, Var x, Var weight, Var bias);

// Row-wise normalization of x [B,F] to zero mean / unit variance (biased
// variance, eps inside the square root), then * gain + shift.
template <typename T>
Var layernorm(Tape<T>& tape, Var x, Var gain, Var shift, double eps = 1e-5);

template <typename T>
Var relu(Tape<T>& tape, Var x);
template <typename T>
Var tanh(Tape<T>& tape, Var x);

enum class Activation { kRelu, kTanh };
template <typename T>
Var activation(Tape<T>& tape, Var x, Activation kind);

template <typename T>
Var add(Tape<T>& tape, Var a, Var b);
template <typename T>
Var sub(Tape<T>& tape, Var a, Var b);
template <typename T>
Var mul(Tape<T>& tape, Var a, Var b);
template <typename T>
Var scale(Tape<T>& tape, Var x, T factor);
template <typename T>
Var add_scalar(Tape<T>& tape, Var x, T offset);
// Elementwise minimum; ties route the gradient to `a`.
template <typename T>
Var minimum(Tape<T>& tape, Var a, Var b);
// Clamp to [lo, hi] with an identity (straight-through) gradient.
template <typename T>
Var clamp_straight_through(Tape<T>& tape, Var x, T lo, T hi);

// [B,F] ++ [B,A] -> [B,F+A]
template <typename T>
Var concat_columns(Tape<T>& tape, Var a, Var b);
template <typename T>
Var reshape(Tape<T>& tape, Var x, Shape shape);

template <typename T>
Var sum(Tape<T>& tape, Var x);
template <typename T>
Var mean(Tape<T>& tape, Var x);
// mean((x - target)^2) against a constant target of x's size.
template <typename T>
Var mse(Tape<T>& tape, Var x, std::span<const T> target);

}  // namespace drq::nn
