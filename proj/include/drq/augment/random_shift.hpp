#pragma once

#include <span>
#include <vector>

#include "drq/core/rng.hpp"
#include "drq/nn/tensor.hpp"

// Random-shift image augmentation: replicate-pad each image by `pad`, then
// resample an unpadded-size window displaced by a continuous (dx, dy) in
// [-pad, pad]^2 with bilinear interpolation. One shift per image, shared by
// all of that image's channels.
namespace drq::augment {

struct Shift {
  float dx = 0.0f;
  float dy = 0.0f;
};

// Draws dx then dy per image, uniform over [-pad, pad].
std::vector<Shift> draw_shifts(std::size_t batch, std::size_t pad, Rng& rng);

// [B,C,H,W] -> [B,C,H+2pad,W+2pad], borders copy the nearest edge pixel.
template <typename T>
nn::Tensor<T> pad_replicate(const nn::Tensor<T>& batch, std::size_t pad);

// Per-pixel bilinear read of a padded batch: output (i, j) of image b samples
// padded coordinate (i + pad + dy_b, j + pad + dx_b).
template <typename T>
nn::Tensor<T> bilinear_sample(const nn::Tensor<T>& padded, std::span<const Shift> shifts, std::size_t pad);

// Reference path: pad_replicate followed by bilinear_sample.
template <typename T>
nn::Tensor<T> apply_shifts_reference(const nn::Tensor<T>& batch, std::span<const Shift> shifts,
                                     std::size_t pad);
// Optimized path: separable flow-field resampling straight from the unpadded
// planes (edge clamping stands in for padding), SIMD kernels, batch-parallel.
template <typename T>
nn::Tensor<T> apply_shifts(const nn::Tensor<T>& batch, std::span<const Shift> shifts, std::size_t pad);
// Same, writing into `out`; its storage is reused when the shape already
// matches, so repeated calls skip allocation and first-touch page faults.
template <typename T>
void apply_shifts_into(const nn::Tensor<T>& batch, std::span<const Shift> shifts, std::size_t pad,
                       nn::Tensor<T>& out);

template <typename T>
nn::Tensor<T> random_shift(const nn::Tensor<T>& batch, std::size_t pad, Rng& rng);
template <typename T>
nn::Tensor<T> random_shift_reference(const nn::Tensor<T>& batch, std::size_t pad, Rng& rng);

}  // namespace drq::augment
