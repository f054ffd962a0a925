#pragma once

#include "drq/core/rng.hpp"
#include "drq/nn/tensor.hpp"

namespace drq::nn {

// Fills `weight` (viewed as [dim(0), size/dim(0)]) with a random matrix
// whose rows or columns, whichever are fewer, are orthonormal, scaled by gain.
template <typename T>
void orthogonal_init(Tensor<T>& weight, double gain, Rng& rng);

}  // namespace drq::nn
