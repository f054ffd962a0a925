// AVX2 + FMA variants. This translation unit is the only one compiled with
// -mavx2 -mfma; nothing here may run before dispatch has checked the CPU.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "drq/kernels/variants.hpp"

namespace drq::kernels::avx2 {
namespace {

constexpr std::size_t kMr = 6;
constexpr std::size_t kNr = 16;
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 120;
constexpr std::size_t kNc = 1024;

// c[0..6)[0..16) += a_panel * b_panel over kc steps.
// a: kc x 6 interleaved, b: kc x 16 interleaved.
inline void micro_6x16(std::size_t kc, const float* a, const float* b, float* c, std::size_t ldc) {
  __m256 c00 = _mm256_setzero_ps(), c01 = _mm256_setzero_ps();
  __m256 c10 = _mm256_setzero_ps(), c11 = _mm256_setzero_ps();
  __m256 c20 = _mm256_setzero_ps(), c21 = _mm256_setzero_ps();
  __m256 c30 = _mm256_setzero_ps(), c31 = _mm256_setzero_ps();
  __m256 c40 = _mm256_setzero_ps(), c41 = _mm256_setzero_ps();
  __m256 c50 = _mm256_setzero_ps(), c51 = _mm256_setzero_ps();
  for (std::size_t p = 0; p < kc; ++p) {
    const __m256 b0 = _mm256_loadu_ps(b);
    const __m256 b1 = _mm256_loadu_ps(b + 8);
    __m256 av = _mm256_broadcast_ss(a + 0);
    c00 = _mm256_fmadd_ps(av, b0, c00);
    c01 = _mm256_fmadd_ps(av, b1, c01);
    av = _mm256_broadcast_ss(a + 1);
    c10 = _mm256_fmadd_ps(av, b0, c10);
    c11 = _mm256_fmadd_ps(av, b1, c11);
    av = _mm256_broadcast_ss(a + 2);
    c20 = _mm256_fmadd_ps(av, b0, c20);
    c21 = _mm256_fmadd_ps(av, b1, c21);
    av = _mm256_broadcast_ss(a + 3);
    c30 = _mm256_fmadd_ps(av, b0, c30);
    c31 = _mm256_fmadd_ps(av, b1, c31);
    av = _mm256_broadcast_ss(a + 4);
    c40 = _mm256_fmadd_ps(av, b0, c40);
    c41 = _mm256_fmadd_ps(av, b1, c41);
    av = _mm256_broadcast_ss(a + 5);
    c50 = _mm256_fmadd_ps(av, b0, c50);
    c51 = _mm256_fmadd_ps(av, b1, c51);
    a += kMr;
    b += kNr;
  }
  const auto acc = [ldc](float* row, __m256 lo, __m256 hi) {
    _mm256_storeu_ps(row, _mm256_add_ps(_mm256_loadu_ps(row), lo));
    _mm256_storeu_ps(row + 8, _mm256_add_ps(_mm256_loadu_ps(row + 8), hi));
    (void)ldc;
  };
  acc(c + 0 * ldc, c00, c01);
  acc(c + 1 * ldc, c10, c11);
  acc(c + 2 * ldc, c20, c21);
  acc(c + 3 * ldc, c30, c31);
  acc(c + 4 * ldc, c40, c41);
  acc(c + 5 * ldc, c50, c51);
}

void pack_a(Trans ta, const float* a, std::size_t lda, std::size_t i0, std::size_t mc,
            std::size_t p0, std::size_t kc, float alpha, float* out) {
  for (std::size_t s = 0; s < mc; s += kMr) {
    const std::size_t rows = std::min(kMr, mc - s);
    float* panel = out + s * kc;
    if (ta == Trans::kNo) {
      for (std::size_t r = 0; r < kMr; ++r) {
        if (r < rows) {
          const float* src = a + (i0 + s + r) * lda + p0;
          for (std::size_t p = 0; p < kc; ++p) panel[p * kMr + r] = alpha * src[p];
        } else {
          for (std::size_t p = 0; p < kc; ++p) panel[p * kMr + r] = 0.0f;
        }
      }
    } else {
      for (std::size_t p = 0; p < kc; ++p) {
        const float* src = a + (p0 + p) * lda + i0 + s;
        for (std::size_t r = 0; r < kMr; ++r) panel[p * kMr + r] = r < rows ? alpha * src[r] : 0.0f;
      }
    }
  }
}

void pack_b(Trans tb, const float* b, std::size_t ldb, std::size_t p0, std::size_t kc,
            std::size_t j0, std::size_t nc, float* out) {
  for (std::size_t t = 0; t < nc; t += kNr) {
    const std::size_t cols = std::min(kNr, nc - t);
    float* panel = out + t * kc;
    if (tb == Trans::kNo) {
      for (std::size_t p = 0; p < kc; ++p) {
        const float* src = b + (p0 + p) * ldb + j0 + t;
        float* dst = panel + p * kNr;
        if (cols == kNr) {
          _mm256_storeu_ps(dst, _mm256_loadu_ps(src));
          _mm256_storeu_ps(dst + 8, _mm256_loadu_ps(src + 8));
        } else {
          std::size_t c = 0;
          for (; c < cols; ++c) dst[c] = src[c];
          for (; c < kNr; ++c) dst[c] = 0.0f;
        }
      }
    } else {
      for (std::size_t c = 0; c < kNr; ++c) {
        if (c < cols) {
          const float* src = b + (j0 + t + c) * ldb + p0;
          for (std::size_t p = 0; p < kc; ++p) panel[p * kNr + c] = src[p];
        } else {
          for (std::size_t p = 0; p < kc; ++p) panel[p * kNr + c] = 0.0f;
        }
      }
    }
  }
}

void sgemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
           const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta, float* c,
           std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    float* row = c + i * ldc;
    if (beta == 0.0f) {
      std::fill(row, row + n, 0.0f);
    } else if (beta != 1.0f) {
      for (std::size_t j = 0; j < n; ++j) row[j] *= beta;
    }
  }
  if (m == 0 || n == 0 || k == 0 || alpha == 0.0f) return;

  thread_local std::vector<float> a_pack;
  thread_local std::vector<float> b_pack;
  a_pack.resize(((kMc + kMr - 1) / kMr) * kMr * kKc);
  b_pack.resize(((kNc + kNr - 1) / kNr) * kNr * kKc);
  alignas(32) float edge[kMr * kNr];

  for (std::size_t jc = 0; jc < n; jc += kNc) {
    const std::size_t nc = std::min(kNc, n - jc);
    for (std::size_t pc = 0; pc < k; pc += kKc) {
      const std::size_t kc = std::min(kKc, k - pc);
      pack_b(tb, b, ldb, pc, kc, jc, nc, b_pack.data());
      for (std::size_t ic = 0; ic < m; ic += kMc) {
        const std::size_t mc = std::min(kMc, m - ic);
        pack_a(ta, a, lda, ic, mc, pc, kc, alpha, a_pack.data());
        for (std::size_t jr = 0; jr < nc; jr += kNr) {
          const std::size_t nr = std::min(kNr, nc - jr);
          const float* bp = b_pack.data() + jr * kc;
          for (std::size_t ir = 0; ir < mc; ir += kMr) {
            const std::size_t mr = std::min(kMr, mc - ir);
            const float* ap = a_pack.data() + ir * kc;
            float* ct = c + (ic + ir) * ldc + jc + jr;
            if (mr == kMr && nr == kNr) {
              micro_6x16(kc, ap, bp, ct, ldc);
            } else {
              std::memset(edge, 0, sizeof(edge));
              micro_6x16(kc, ap, bp, edge, kNr);
              for (std::size_t r = 0; r < mr; ++r) {
                for (std::size_t q = 0; q < nr; ++q) ct[r * ldc + q] += edge[r * kNr + q];
              }
            }
          }
        }
      }
    }
  }
}

void relu_forward(const float* x, float* y, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const float* x, const float* gy, float* gx, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
    const __m256 g = _mm256_and_ps(mask, _mm256_loadu_ps(gy + i));
    _mm256_storeu_ps(gx + i, _mm256_add_ps(_mm256_loadu_ps(gx + i), g));
  }
  for (; i < n; ++i) {
    if (x[i] > 0.0f) gx[i] += gy[i];
  }
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 prod = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void adam_update(float* p, const float* g, float* m, float* v, std::size_t n, const AdamCoeffs& c) {
  const float b1 = static_cast<float>(c.beta1);
  const float b2 = static_cast<float>(c.beta2);
  const float omb1 = static_cast<float>(1.0 - c.beta1);
  const float omb2 = static_cast<float>(1.0 - c.beta2);
  const float inv_bc1 = static_cast<float>(1.0 / c.bias_correction1);
  const float inv_bc2 = static_cast<float>(1.0 / c.bias_correction2);
  const float lr = static_cast<float>(c.lr);
  const float eps = static_cast<float>(c.eps);
  const __m256 vb1 = _mm256_set1_ps(b1), vb2 = _mm256_set1_ps(b2);
  const __m256 vomb1 = _mm256_set1_ps(omb1), vomb2 = _mm256_set1_ps(omb2);
  const __m256 vbc1 = _mm256_set1_ps(inv_bc1), vbc2 = _mm256_set1_ps(inv_bc2);
  const __m256 vlr = _mm256_set1_ps(lr), veps = _mm256_set1_ps(eps);
  std::size_t i = 0;
  // Same operation order as the scalar reference, no fused multiply-adds,
  // so both variants produce identical bits.
  for (; i + 8 <= n; i += 8) {
    const __m256 gi = _mm256_loadu_ps(g + i);
    __m256 mi = _mm256_add_ps(_mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(vomb1, gi));
    __m256 vi = _mm256_add_ps(_mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)),
                              _mm256_mul_ps(vomb2, _mm256_mul_ps(gi, gi)));
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    const __m256 m_hat = _mm256_mul_ps(mi, vbc1);
    const __m256 v_hat = _mm256_mul_ps(vi, vbc2);
    const __m256 step = _mm256_div_ps(m_hat, _mm256_add_ps(_mm256_sqrt_ps(v_hat), veps));
    _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), _mm256_mul_ps(vlr, step)));
  }
  for (; i < n; ++i) {
    const float gi = g[i];
    m[i] = b1 * m[i] + omb1 * gi;
    v[i] = b2 * v[i] + omb2 * (gi * gi);
    const float m_hat = m[i] * inv_bc1;
    const float v_hat = v[i] * inv_bc2;
    p[i] = p[i] - lr * (m_hat / (std::sqrt(v_hat) + eps));
  }
}

void polyak_update(float* target, const float* online, float tau, std::size_t n) {
  const float keep = 1.0f - tau;
  const __m256 vkeep = _mm256_set1_ps(keep), vtau = _mm256_set1_ps(tau);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 t = _mm256_mul_ps(vkeep, _mm256_loadu_ps(target + i));
    const __m256 o = _mm256_mul_ps(vtau, _mm256_loadu_ps(online + i));
    _mm256_storeu_ps(target + i, _mm256_add_ps(t, o));
  }
  for (; i < n; ++i) target[i] = keep * target[i] + tau * online[i];
}

void unit_from_bytes(const std::uint8_t* src, float* dst, std::size_t n) {
  const float scale = 1.0f / 255.0f;
  const __m256 vscale = _mm256_set1_ps(scale);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m128i bytes = _mm_loadl_epi64(reinterpret_cast<const __m128i*>(src + i));
    const __m256 f = _mm256_cvtepi32_ps(_mm256_cvtepu8_epi32(bytes));
    _mm256_storeu_ps(dst + i, _mm256_mul_ps(f, vscale));
  }
  for (; i < n; ++i) dst[i] = static_cast<float>(src[i]) * scale;
}

inline std::ptrdiff_t clamp_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  return i < 0 ? 0 : (i >= n ? n - 1 : i);
}

void shift_plane(const float* src, std::size_t h, std::size_t w, float dx, float dy, float* dst,
                 float* scratch) {
  const auto H = static_cast<std::ptrdiff_t>(h);
  const auto W = static_cast<std::ptrdiff_t>(w);
  const float fx_floor = std::floor(dx);
  const float fy_floor = std::floor(dy);
  const auto ox = static_cast<std::ptrdiff_t>(fx_floor);
  const auto oy = static_cast<std::ptrdiff_t>(fy_floor);
  const float fx = dx - fx_floor;
  const float fy = dy - fy_floor;
  const __m256 vfx = _mm256_set1_ps(fx);
  const __m256 vfy = _mm256_set1_ps(fy);

  // Columns whose two taps are both in range read contiguous memory.
  const std::ptrdiff_t j_lo = std::clamp<std::ptrdiff_t>(-ox, 0, W);
  const std::ptrdiff_t j_hi = std::clamp<std::ptrdiff_t>(W - 1 - ox, j_lo, W);

  for (std::ptrdiff_t r = 0; r < H; ++r) {
    const float* row = src + r * W;
    float* out = scratch + r * W;
    std::ptrdiff_t j = 0;
    for (; j < j_lo; ++j) {
      const float left = row[clamp_index(j + ox, W)];
      const float right = row[clamp_index(j + ox + 1, W)];
      out[j] = left + fx * (right - left);
    }
    for (; j + 8 <= j_hi; j += 8) {
      const __m256 left = _mm256_loadu_ps(row + j + ox);
      const __m256 right = _mm256_loadu_ps(row + j + ox + 1);
      _mm256_storeu_ps(out + j, _mm256_fmadd_ps(vfx, _mm256_sub_ps(right, left), left));
    }
    for (; j < W; ++j) {
      const float left = row[clamp_index(j + ox, W)];
      const float right = row[clamp_index(j + ox + 1, W)];
      out[j] = left + fx * (right - left);
    }
  }
  for (std::ptrdiff_t i = 0; i < H; ++i) {
    const float* top = scratch + clamp_index(i + oy, H) * W;
    const float* bottom = scratch + clamp_index(i + oy + 1, H) * W;
    float* out = dst + i * W;
    std::ptrdiff_t j = 0;
    for (; j + 8 <= W; j += 8) {
      const __m256 t = _mm256_loadu_ps(top + j);
      const __m256 b = _mm256_loadu_ps(bottom + j);
      _mm256_storeu_ps(out + j, _mm256_fmadd_ps(vfy, _mm256_sub_ps(b, t), t));
    }
    for (; j < W; ++j) out[j] = top[j] + fy * (bottom[j] - top[j]);
  }
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{
      &sgemm,         &relu_forward,  &relu_backward,   &axpy,
      &adam_update,   &polyak_update, &unit_from_bytes, &shift_plane,
  };
  return t;
}

}  // namespace drq::kernels::avx2
