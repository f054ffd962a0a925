#include <algorithm>
#include <cmath>

#include "drq/kernels/variants.hpp"

namespace drq::kernels::scalar {

template <typename T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    if (beta == T(0)) {
      std::fill(crow, crow + n, T(0));
    } else if (beta != T(1)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] *= beta;
    }
  }
  if (m == 0 || n == 0 || k == 0) return;

  const auto a_at = [&](std::size_t i, std::size_t p) {
    return ta == Trans::kNo ? a[i * lda + p] : a[p * lda + i];
  };
  if (tb == Trans::kNo) {
    // Row of C accumulates scaled rows of B; inner loop is contiguous.
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c + i * ldc;
      for (std::size_t p = 0; p < k; ++p) {
        const T s = alpha * a_at(i, p);
        const T* brow = b + p * ldb;
        for (std::size_t j = 0; j < n; ++j) crow[j] += s * brow[j];
      }
    }
  } else {
    // op(B)(p, j) = B[j, p]: dot products along rows of B.
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c + i * ldc;
      for (std::size_t j = 0; j < n; ++j) {
        const T* brow = b + j * ldb;
        T acc = 0;
        for (std::size_t p = 0; p < k; ++p) acc += a_at(i, p) * brow[p];
        crow[j] += alpha * acc;
      }
    }
  }
}

template <typename T>
void relu_forward(const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(const T* x, const T* gy, T* gx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > T(0)) gx[i] += gy[i];
  }
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void adam_update(T* p, const T* g, T* m, T* v, std::size_t n, const AdamCoeffs& c) {
  const T b1 = static_cast<T>(c.beta1);
  const T b2 = static_cast<T>(c.beta2);
  const T one_minus_b1 = static_cast<T>(1.0 - c.beta1);
  const T one_minus_b2 = static_cast<T>(1.0 - c.beta2);
  const T inv_bc1 = static_cast<T>(1.0 / c.bias_correction1);
  const T inv_bc2 = static_cast<T>(1.0 / c.bias_correction2);
  const T lr = static_cast<T>(c.lr);
  const T eps = static_cast<T>(c.eps);
  for (std::size_t i = 0; i < n; ++i) {
    const T gi = g[i];
    m[i] = b1 * m[i] + one_minus_b1 * gi;
    v[i] = b2 * v[i] + one_minus_b2 * (gi * gi);
    const T m_hat = m[i] * inv_bc1;
    const T v_hat = v[i] * inv_bc2;
    p[i] = p[i] - lr * (m_hat / (std::sqrt(v_hat) + eps));
  }
}

template <typename T>
void polyak_update(T* target, const T* online, T tau, std::size_t n) {
  const T keep = T(1) - tau;
  for (std::size_t i = 0; i < n; ++i) target[i] = keep * target[i] + tau * online[i];
}

template <typename T>
void unit_from_bytes(const std::uint8_t* src, T* dst, std::size_t n) {
  const T scale = T(1) / T(255);
  for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<T>(src[i]) * scale;
}

namespace {
inline std::ptrdiff_t clamp_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  return i < 0 ? 0 : (i >= n ? n - 1 : i);
}
}  // namespace

template <typename T>
void shift_plane(const T* src, std::size_t h, std::size_t w, T dx, T dy, T* dst, T* scratch) {
  const auto H = static_cast<std::ptrdiff_t>(h);
  const auto W = static_cast<std::ptrdiff_t>(w);
  const T fx_floor = std::floor(dx);
  const T fy_floor = std::floor(dy);
  const auto ox = static_cast<std::ptrdiff_t>(fx_floor);
  const auto oy = static_cast<std::ptrdiff_t>(fy_floor);
  const T fx = dx - fx_floor;
  const T fy = dy - fy_floor;

  // Horizontal pass over every source row.
  for (std::ptrdiff_t r = 0; r < H; ++r) {
    const T* row = src + r * W;
    T* out = scratch + r * W;
    for (std::ptrdiff_t j = 0; j < W; ++j) {
      const T left = row[clamp_index(j + ox, W)];
      const T right = row[clamp_index(j + ox + 1, W)];
      out[j] = left + fx * (right - left);
    }
  }
  // Vertical pass.
  for (std::ptrdiff_t i = 0; i < H; ++i) {
    const T* top = scratch + clamp_index(i + oy, H) * W;
    const T* bottom = scratch + clamp_index(i + oy + 1, H) * W;
    T* out = dst + i * W;
    for (std::ptrdiff_t j = 0; j < W; ++j) out[j] = top[j] + fy * (bottom[j] - top[j]);
  }
}

#define DRQ_INSTANTIATE(T)                                                                      \
  template void gemm<T>(Trans, Trans, std::size_t, std::size_t, std::size_t, T, const T*,       \
                        std::size_t, const T*, std::size_t, T, T*, std::size_t);                \
  template void relu_forward<T>(const T*, T*, std::size_t);                                     \
  template void relu_backward<T>(const T*, const T*, T*, std::size_t);                          \
  template void axpy<T>(T, const T*, T*, std::size_t);                                          \
  template void adam_update<T>(T*, const T*, T*, T*, std::size_t, const AdamCoeffs&);           \
  template void polyak_update<T>(T*, const T*, T, std::size_t);                                 \
  template void unit_from_bytes<T>(const std::uint8_t*, T*, std::size_t);                       \
  template void shift_plane<T>(const T*, std::size_t, std::size_t, T, T, T*, T*);

DRQ_INSTANTIATE(float)
DRQ_INSTANTIATE(double)
#undef DRQ_INSTANTIATE

const KernelTable& table() {
  static const KernelTable t{
      &gemm<float>,         &relu_forward<float>,  &relu_backward<float>,   &axpy<float>,
      &adam_update<float>,  &polyak_update<float>, &unit_from_bytes<float>, &shift_plane<float>,
  };
  return t;
}

}  // namespace drq::kernels::scalar
