#include "drq/augment/random_shift.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "drq/core/error.hpp"
#include "drq/core/parallel.hpp"
#include "drq/kernels/kernels.hpp"

namespace drq::augment {
namespace {

void require_image_batch(const nn::Shape& s, const char* op) {
  require(s.size() == 4, std::string(op) + ": expected [B,C,H,W], got " + nn::shape_string(s));
}

void require_shifts(std::span<const Shift> shifts, std::size_t batch, std::size_t pad, const char* op) {
  require(shifts.size() == batch, std::string(op) + ": " + std::to_string(shifts.size()) + " shifts for " +
                                      std::to_string(batch) + " images");
  const auto limit = static_cast<float>(pad);
  for (const auto& s : shifts) {
    require(std::abs(s.dx) <= limit && std::abs(s.dy) <= limit,
            std::string(op) + ": shift (" + std::to_string(s.dx) + ", " + std::to_string(s.dy) +
                ") outside [-" + std::to_string(pad) + ", " + std::to_string(pad) + "]");
  }
}

}  // namespace

std::vector<Shift> draw_shifts(std::size_t batch, std::size_t pad, Rng& rng) {
  std::vector<Shift> shifts(batch);
  const double p = static_cast<double>(pad);
  for (auto& s : shifts) {
    s.dx = static_cast<float>(uniform(rng, -p, p));
    s.dy = static_cast<float>(uniform(rng, -p, p));
  }
  return shifts;
}

template <typename T>
nn::Tensor<T> pad_replicate(const nn::Tensor<T>& batch, std::size_t pad) {
  const auto& s = batch.shape();
  require_image_batch(s, "pad_replicate");
  const std::size_t b = s[0], c = s[1], h = s[2], w = s[3];
  const std::size_t hp = h + 2 * pad, wp = w + 2 * pad;
  nn::Tensor<T> out({b, c, hp, wp});
  for (std::size_t plane = 0; plane < b * c; ++plane) {
    const T* src = batch.data() + plane * h * w;
    T* dst = out.data() + plane * hp * wp;
    for (std::size_t i = 0; i < hp; ++i) {
      const std::size_t si = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(pad), 0,
                                                        static_cast<std::ptrdiff_t>(h) - 1);
      for (std::size_t j = 0; j < wp; ++j) {
        const std::size_t sj = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(pad), 0,
                                                          static_cast<std::ptrdiff_t>(w) - 1);
        dst[i * wp + j] = src[si * w + sj];
      }
    }
  }
  return out;
}

template <typename T>
nn::Tensor<T> bilinear_sample(const nn::Tensor<T>& padded, std::span<const Shift> shifts, std::size_t pad) {
  const auto& s = padded.shape();
  require_image_batch(s, "bilinear_sample");
  const std::size_t b = s[0], c = s[1], hp = s[2], wp = s[3];
  require(hp > 2 * pad && wp > 2 * pad, "bilinear_sample: padded extent too small for pad " + std::to_string(pad));
  require_shifts(shifts, b, pad, "bilinear_sample");
  const std::size_t h = hp - 2 * pad, w = wp - 2 * pad;
  nn::Tensor<T> out({b, c, h, w});
  for (std::size_t n = 0; n < b; ++n) {
    const T dx = static_cast<T>(shifts[n].dx);
    const T dy = static_cast<T>(shifts[n].dy);
    const T ox = std::floor(dx), oy = std::floor(dy);
    const T fx = dx - ox, fy = dy - oy;
    const auto ix = static_cast<std::ptrdiff_t>(ox), iy = static_cast<std::ptrdiff_t>(oy);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T* src = padded.data() + (n * c + ch) * hp * wp;
      T* dst = out.data() + (n * c + ch) * h * w;
      for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
          const auto y0 = static_cast<std::ptrdiff_t>(i + pad) + iy;
          const auto x0 = static_cast<std::ptrdiff_t>(j + pad) + ix;
          const auto y1 = std::min<std::ptrdiff_t>(y0 + 1, static_cast<std::ptrdiff_t>(hp) - 1);
          const auto x1 = std::min<std::ptrdiff_t>(x0 + 1, static_cast<std::ptrdiff_t>(wp) - 1);
          const T p00 = src[y0 * wp + x0], p01 = src[y0 * wp + x1];
          const T p10 = src[y1 * wp + x0], p11 = src[y1 * wp + x1];
          dst[i * w + j] = (T(1) - fx) * (T(1) - fy) * p00 + fx * (T(1) - fy) * p01 +
                           (T(1) - fx) * fy * p10 + fx * fy * p11;
        }
      }
    }
  }
  return out;
}

template <typename T>
nn::Tensor<T> apply_shifts_reference(const nn::Tensor<T>& batch, std::span<const Shift> shifts,
                                     std::size_t pad) {
  require_image_batch(batch.shape(), "apply_shifts_reference");
  require_shifts(shifts, batch.dim(0), pad, "apply_shifts_reference");
  return bilinear_sample(pad_replicate(batch, pad), shifts, pad);
}

template <typename T>
void apply_shifts_into(const nn::Tensor<T>& batch, std::span<const Shift> shifts, std::size_t pad,
                       nn::Tensor<T>& out) {
  const auto& s = batch.shape();
  require_image_batch(s, "apply_shifts");
  const std::size_t b = s[0], c = s[1], h = s[2], w = s[3];
  require_shifts(shifts, b, pad, "apply_shifts");
  require(&out != &batch, "apply_shifts_into: output must not alias the input");
  if (out.shape() != s) out = nn::Tensor<T>(s);
  if (pad == 0) {
    std::copy(batch.values().begin(), batch.values().end(), out.values().begin());
    return;
  }
  parallel_for_chunks(b, [&](std::size_t begin, std::size_t end, std::size_t) {
    std::vector<T> scratch(h * w);
    for (std::size_t n = begin; n < end; ++n) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t offset = (n * c + ch) * h * w;
        kernels::shift_plane(batch.data() + offset, h, w, static_cast<T>(shifts[n].dx),
                             static_cast<T>(shifts[n].dy), out.data() + offset, scratch.data());
      }
    }
  });
}

template <typename T>
nn::Tensor<T> apply_shifts(const nn::Tensor<T>& batch, std::span<const Shift> shifts, std::size_t pad) {
  nn::Tensor<T> out;
  apply_shifts_into(batch, shifts, pad, out);
  return out;
}

template <typename T>
nn::Tensor<T> random_shift(const nn::Tensor<T>& batch, std::size_t pad, Rng& rng) {
  require_image_batch(batch.shape(), "random_shift");
  const auto shifts = draw_shifts(batch.dim(0), pad, rng);
  return apply_shifts(batch, shifts, pad);
}

template <typename T>
nn::Tensor<T> random_shift_reference(const nn::Tensor<T>& batch, std::size_t pad, Rng& rng) {
  require_image_batch(batch.shape(), "random_shift_reference");
  const auto shifts = draw_shifts(batch.dim(0), pad, rng);
  return apply_shifts_reference(batch, shifts, pad);
}

#define DRQ_INSTANTIATE(T)                                                                              \
  template nn::Tensor<T> pad_replicate<T>(const nn::Tensor<T>&, std::size_t);                           \
  template nn::Tensor<T> bilinear_sample<T>(const nn::Tensor<T>&, std::span<const Shift>, std::size_t); \
  template nn::Tensor<T> apply_shifts_reference<T>(const nn::Tensor<T>&, std::span<const Shift>,        \
                                                   std::size_t);                                        \
  template nn::Tensor<T> apply_shifts<T>(const nn::Tensor<T>&, std::span<const Shift>, std::size_t);    \
  template void apply_shifts_into<T>(const nn::Tensor<T>&, std::span<const Shift>, std::size_t,          \
                                     nn::Tensor<T>&);                                                  \
  template nn::Tensor<T> random_shift<T>(const nn::Tensor<T>&, std::size_t, Rng&);                      \
  template nn::Tensor<T> random_shift_reference<T>(const nn::Tensor<T>&, std::size_t, Rng&);

DRQ_INSTANTIATE(float)
DRQ_INSTANTIATE(double)
#undef DRQ_INSTANTIATE

}  // namespace drq::augment
