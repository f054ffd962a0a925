#include "drq/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "drq/core/error.hpp"
#include "drq/core/parallel.hpp"
#include "drq/kernels/kernels.hpp"

namespace drq::nn {
namespace {

using kernels::Trans;

template <typename T>
bool any_grad(const Tape<T>& tape, std::initializer_list<Var> vars) {
  for (Var v : vars) {
    if (tape.requires_grad(v)) return true;
  }
  return false;
}

void require_rank(const Shape& s, std::size_t rank, const char* op, const char* arg) {
  require(s.size() == rank, std::string(op) + ": " + arg + " must have rank " + std::to_string(rank) +
                                ", got " + shape_string(s));
}

// x_n [C,H,W] -> cols [C*9, Ho*Wo]
template <typename T>
void im2col(const T* x, std::size_t c_in, std::size_t h, std::size_t w, std::size_t stride,
            std::size_t ho, std::size_t wo, T* cols) {
  const std::size_t n = ho * wo;
  for (std::size_t c = 0; c < c_in; ++c) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        T* dst = cols + ((c * 3 + ky) * 3 + kx) * n;
        for (std::size_t oy = 0; oy < ho; ++oy) {
          const T* src = x + c * h * w + (oy * stride + ky) * w + kx;
          T* d = dst + oy * wo;
          if (stride == 1) {
            std::memcpy(d, src, wo * sizeof(T));
          } else {
            for (std::size_t ox = 0; ox < wo; ++ox) d[ox] = src[ox * stride];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, std::size_t c_in, std::size_t h, std::size_t w, std::size_t stride,
                std::size_t ho, std::size_t wo, T* dx) {
  const std::size_t n = ho * wo;
  for (std::size_t c = 0; c < c_in; ++c) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const T* src = cols + ((c * 3 + ky) * 3 + kx) * n;
        for (std::size_t oy = 0; oy < ho; ++oy) {
          T* d = dx + c * h * w + (oy * stride + ky) * w + kx;
          const T* s = src + oy * wo;
          for (std::size_t ox = 0; ox < wo; ++ox) d[ox * stride] += s[ox];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var weight, Var bias, std::size_t stride) {
  const Shape xs = tape.shape(x);
  const Shape ws = tape.shape(weight);
  const Shape bs = tape.shape(bias);
  require_rank(xs, 4, "conv2d", "input");
  require_rank(ws, 4, "conv2d", "weight");
  require_rank(bs, 1, "conv2d", "bias");
  require(stride == 1 || stride == 2, "conv2d: stride must be 1 or 2, got " + std::to_string(stride));
  const std::size_t batch = xs[0], c_in = xs[1], h = xs[2], w = xs[3];
  const std::size_t c_out = ws[0];
  require(ws[1] == c_in, "conv2d: weight expects " + std::to_string(ws[1]) + " input channels, input has " +
                             std::to_string(c_in));
  require(ws[2] == 3 && ws[3] == 3, "conv2d: kernel must be 3x3, got " + shape_string(ws));
  require(bs[0] == c_out, "conv2d: bias has " + std::to_string(bs[0]) + " entries for " +
                              std::to_string(c_out) + " output channels");
  require(h >= 3 && w >= 3, "conv2d: spatial extent " + std::to_string(h) + "x" + std::to_string(w) +
                                " smaller than the 3x3 kernel");
  const std::size_t ho = (h - 3) / stride + 1;
  const std::size_t wo = (w - 3) / stride + 1;
  const std::size_t k = c_in * 9;
  const std::size_t n = ho * wo;

  Tensor<T> out({batch, c_out, ho, wo});
  {
    const T* xd = tape.value(x).data();
    const T* wd = tape.value(weight).data();
    const T* bd = tape.value(bias).data();
    T* yd = out.data();
    parallel_for_chunks(batch, [&](std::size_t begin, std::size_t end, std::size_t) {
      std::vector<T> cols(k * n);
      for (std::size_t img = begin; img < end; ++img) {
        im2col(xd + img * c_in * h * w, c_in, h, w, stride, ho, wo, cols.data());
        T* y = yd + img * c_out * n;
        kernels::gemm(Trans::kNo, Trans::kNo, c_out, n, k, T(1), wd, k, cols.data(), n, T(0), y, n);
        for (std::size_t o = 0; o < c_out; ++o) {
          const T bo = bd[o];
          T* row = y + o * n;
          for (std::size_t j = 0; j < n; ++j) row[j] += bo;
        }
      }
    });
  }

  const bool rg = any_grad(tape, {x, weight, bias});
  return tape.record(std::move(out), rg, [=](Tape<T>& t, std::span<const T> gy) {
    const bool need_x = t.requires_grad(x);
    const bool need_w = t.requires_grad(weight);
    const bool need_b = t.requires_grad(bias);
    const T* xd = t.value(x).data();
    const T* wd = t.value(weight).data();
    T* gx = need_x ? t.grad_buffer(x).data() : nullptr;
    T* gw = need_w ? t.grad_buffer(weight).data() : nullptr;
    T* gb = need_b ? t.grad_buffer(bias).data() : nullptr;

    const std::size_t chunks = chunk_count(batch);
    // Per-chunk partial sums for the shared weight/bias gradients, reduced
    // in chunk order afterwards.
    std::vector<std::vector<T>> part_w(chunks), part_b(chunks);
    parallel_for_chunks(batch, [&](std::size_t begin, std::size_t end, std::size_t worker) {
      std::vector<T> cols(need_w ? k * n : 0);
      std::vector<T> dcols(need_x ? k * n : 0);
      T* acc_w = nullptr;
      T* acc_b = nullptr;
      if (chunks == 1) {
        acc_w = gw;
        acc_b = gb;
      } else {
        if (need_w) acc_w = (part_w[worker] = std::vector<T>(c_out * k, T(0))).data();
        if (need_b) acc_b = (part_b[worker] = std::vector<T>(c_out, T(0))).data();
      }
      for (std::size_t img = begin; img < end; ++img) {
        const T* g = gy.data() + img * c_out * n;
        if (need_b) {
          for (std::size_t o = 0; o < c_out; ++o) {
            T s = 0;
            const T* row = g + o * n;
            for (std::size_t j = 0; j < n; ++j) s += row[j];
            acc_b[o] += s;
          }
        }
        if (need_w) {
          im2col(xd + img * c_in * h * w, c_in, h, w, stride, ho, wo, cols.data());
          kernels::gemm(Trans::kNo, Trans::kYes, c_out, k, n, T(1), g, n, cols.data(), n, T(1), acc_w, k);
        }
        if (need_x) {
          kernels::gemm(Trans::kYes, Trans::kNo, k, n, c_out, T(1), wd, k, g, n, T(0), dcols.data(), n);
          col2im_add(dcols.data(), c_in, h, w, stride, ho, wo, gx + img * c_in * h * w);
        }
      }
    });
    if (chunks > 1) {
      for (std::size_t c = 0; c < chunks; ++c) {
        if (need_w && !part_w[c].empty()) {
          for (std::size_t i = 0; i < c_out * k; ++i) gw[i] += part_w[c][i];
        }
        if (need_b && !part_b[c].empty()) {
          for (std::size_t i = 0; i < c_out; ++i) gb[i] += part_b[c][i];
        }
      }
    }
  });
}

template <typename T>
Var linear(Tape<T>& tape, Var x, Var weight, Var bias) {
  const Shape xs = tape.shape(x);
  const Shape ws = tape.shape(weight);
  const Shape bs = tape.shape(bias);
  require_rank(xs, 2, "linear", "input");
  require_rank(ws, 2, "linear", "weight");
  require_rank(bs, 1, "linear", "bias");
  const std::size_t batch = xs[0], in = xs[1], out_dim = ws[0];
  require(ws[1] == in, "linear: input has " + std::to_string(in) + " features, weight expects " +
                           std::to_string(ws[1]));
  require(bs[0] == out_dim, "linear: bias has " + std::to_string(bs[0]) + " entries for " +
                                std::to_string(out_dim) + " outputs");

  Tensor<T> out({batch, out_dim});
  {
    const T* bd = tape.value(bias).data();
    T* y = out.data();
    for (std::size_t r = 0; r < batch; ++r) std::copy(bd, bd + out_dim, y + r * out_dim);
    kernels::gemm(Trans::kNo, Trans::kYes, batch, out_dim, in, T(1), tape.value(x).data(), in,
                  tape.value(weight).data(), in, T(1), y, out_dim);
  }
  const bool rg = any_grad(tape, {x, weight, bias});
  return tape.record(std::move(out), rg, [=](Tape<T>& t, std::span<const T> gy) {
    if (t.requires_grad(weight)) {
      kernels::gemm(Trans::kYes, Trans::kNo, out_dim, in, batch, T(1), gy.data(), out_dim,
                    t.value(x).data(), in, T(1), t.grad_buffer(weight).data(), in);
    }
    if (t.requires_grad(bias)) {
      auto gb = t.grad_buffer(bias);
      for (std::size_t r = 0; r < batch; ++r) {
        for (std::size_t o = 0; o < out_dim; ++o) gb[o] += gy[r * out_dim + o];
      }
    }
    if (t.requires_grad(x)) {
      kernels::gemm(Trans::kNo, Trans::kNo, batch, in, out_dim, T(1), gy.data(), out_dim,
                    t.value(weight).data(), in, T(1), t.grad_buffer(x).data(), in);
    }
  });
}

template <typename T>
Var layernorm(Tape<T>& tape, Var x, Var gain, Var shift, double eps) {
  const Shape xs = tape.shape(x);
  require_rank(xs, 2, "layernorm", "input");
  const std::size_t rows = xs[0], f = xs[1];
  require(tape.shape(gain) == Shape{f} && tape.shape(shift) == Shape{f},
          "layernorm: gain/shift must have shape [" + std::to_string(f) + "]");
  const T* xd = tape.value(x).data();
  const T* gd = tape.value(gain).data();
  const T* sd = tape.value(shift).data();

  Tensor<T> out({rows, f});
  std::vector<T> normalized(rows * f);
  std::vector<T> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xd + r * f;
    T mu = 0;
    for (std::size_t j = 0; j < f; ++j) mu += row[j];
    mu /= static_cast<T>(f);
    T var = 0;
    for (std::size_t j = 0; j < f; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<T>(f);
    const T is = T(1) / std::sqrt(var + static_cast<T>(eps));
    inv_std[r] = is;
    for (std::size_t j = 0; j < f; ++j) {
      const T nv = (row[j] - mu) * is;
      normalized[r * f + j] = nv;
      out[r * f + j] = nv * gd[j] + sd[j];
    }
  }
  const bool rg = any_grad(tape, {x, gain, shift});
  return tape.record(std::move(out), rg,
                     [=, normalized = std::move(normalized), inv_std = std::move(inv_std)](
                         Tape<T>& t, std::span<const T> gy) {
                       if (t.requires_grad(gain)) {
                         auto gg = t.grad_buffer(gain);
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t j = 0; j < f; ++j) gg[j] += gy[r * f + j] * normalized[r * f + j];
                       }
                       if (t.requires_grad(shift)) {
                         auto gs = t.grad_buffer(shift);
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t j = 0; j < f; ++j) gs[j] += gy[r * f + j];
                       }
                       if (t.requires_grad(x)) {
                         auto gx = t.grad_buffer(x);
                         const T* g = t.value(gain).data();
                         std::vector<T> dn(f);
                         for (std::size_t r = 0; r < rows; ++r) {
                           T mean_dn = 0, mean_dn_n = 0;
                           for (std::size_t j = 0; j < f; ++j) {
                             dn[j] = gy[r * f + j] * g[j];
                             mean_dn += dn[j];
                             mean_dn_n += dn[j] * normalized[r * f + j];
                           }
                           mean_dn /= static_cast<T>(f);
                           mean_dn_n /= static_cast<T>(f);
                           for (std::size_t j = 0; j < f; ++j) {
                             gx[r * f + j] +=
                                 inv_std[r] * (dn[j] - mean_dn - normalized[r * f + j] * mean_dn_n);
                           }
                         }
                       }
                     });
}

template <typename T>
Var relu(Tape<T>& tape, Var x) {
  Tensor<T> out(tape.shape(x));
  kernels::relu_forward(tape.value(x).values(), out.values());
  return tape.record(std::move(out), tape.requires_grad(x), [=](Tape<T>& t, std::span<const T> gy) {
    kernels::relu_backward(t.value(x).values(), gy, t.grad_buffer(x));
  });
}

template <typename T>
Var tanh(Tape<T>& tape, Var x) {
  Tensor<T> out(tape.shape(x));
  const auto xv = tape.value(x).values();
  std::vector<T> slope(xv.size());
  // Saturated tanh rounds to exactly +-1; keep outputs strictly inside.
  const T bound = std::nextafter(T(1), T(0));
  for (std::size_t i = 0; i < xv.size(); ++i) {
    out[i] = std::clamp(std::tanh(xv[i]), -bound, bound);
    slope[i] = T(1) - out[i] * out[i];
  }
  return tape.record(std::move(out), tape.requires_grad(x),
                     [=, slope = std::move(slope)](Tape<T>& t, std::span<const T> gy) {
                       auto gx = t.grad_buffer(x);
                       for (std::size_t i = 0; i < slope.size(); ++i) gx[i] += gy[i] * slope[i];
                     });
}

template <typename T>
Var activation(Tape<T>& tape, Var x, Activation kind) {
  return kind == Activation::kRelu ? relu(tape, x) : nn::tanh(tape, x);
}

namespace {
template <typename T>
void require_same_shape(const Tape<T>& tape, Var a, Var b, const char* op) {
  require(tape.shape(a) == tape.shape(b), std::string(op) + ": shape " + shape_string(tape.shape(a)) +
                                              " vs " + shape_string(tape.shape(b)));
}
}  // namespace

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  require_same_shape(tape, a, b, "add");
  Tensor<T> out(tape.value(a));
  out.drop_grad();
  const auto bv = tape.value(b).values();
  for (std::size_t i = 0; i < bv.size(); ++i) out[i] += bv[i];
  return tape.record(std::move(out), any_grad(tape, {a, b}), [=](Tape<T>& t, std::span<const T> gy) {
    if (t.requires_grad(a)) kernels::axpy(T(1), gy, t.grad_buffer(a));
    if (t.requires_grad(b)) kernels::axpy(T(1), gy, t.grad_buffer(b));
  });
}

template <typename T>
Var sub(Tape<T>& tape, Var a, Var b) {
  require_same_shape(tape, a, b, "sub");
  Tensor<T> out(tape.value(a));
  out.drop_grad();
  const auto bv = tape.value(b).values();
  for (std::size_t i = 0; i < bv.size(); ++i) out[i] -= bv[i];
  return tape.record(std::move(out), any_grad(tape, {a, b}), [=](Tape<T>& t, std::span<const T> gy) {
    if (t.requires_grad(a)) kernels::axpy(T(1), gy, t.grad_buffer(a));
    if (t.requires_grad(b)) kernels::axpy(T(-1), gy, t.grad_buffer(b));
  });
}

template <typename T>
Var mul(Tape<T>& tape, Var a, Var b) {
  require_same_shape(tape, a, b, "mul");
  Tensor<T> out(tape.shape(a));
  const auto av = tape.value(a).values();
  const auto bv = tape.value(b).values();
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  return tape.record(std::move(out), any_grad(tape, {a, b}), [=](Tape<T>& t, std::span<const T> gy) {
    const auto av2 = t.value(a).values();
    const auto bv2 = t.value(b).values();
    if (t.requires_grad(a)) {
      auto ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv2[i];
    }
    if (t.requires_grad(b)) {
      auto gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av2[i];
    }
  });
}

template <typename T>
Var scale(Tape<T>& tape, Var x, T factor) {
  Tensor<T> out(tape.shape(x));
  const auto xv = tape.value(x).values();
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * factor;
  return tape.record(std::move(out), tape.requires_grad(x), [=](Tape<T>& t, std::span<const T> gy) {
    kernels::axpy(factor, gy, t.grad_buffer(x));
  });
}

template <typename T>
Var add_scalar(Tape<T>& tape, Var x, T offset) {
  Tensor<T> out(tape.shape(x));
  const auto xv = tape.value(x).values();
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] + offset;
  return tape.record(std::move(out), tape.requires_grad(x), [=](Tape<T>& t, std::span<const T> gy) {
    kernels::axpy(T(1), gy, t.grad_buffer(x));
  });
}

template <typename T>
Var minimum(Tape<T>& tape, Var a, Var b) {
  require_same_shape(tape, a, b, "minimum");
  Tensor<T> out(tape.shape(a));
  const auto av = tape.value(a).values();
  const auto bv = tape.value(b).values();
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = bv[i] < av[i] ? bv[i] : av[i];
  return tape.record(std::move(out), any_grad(tape, {a, b}), [=](Tape<T>& t, std::span<const T> gy) {
    const auto av2 = t.value(a).values();
    const auto bv2 = t.value(b).values();
    const bool ga_on = t.requires_grad(a), gb_on = t.requires_grad(b);
    std::span<T> ga = ga_on ? t.grad_buffer(a) : std::span<T>{};
    std::span<T> gb = gb_on ? t.grad_buffer(b) : std::span<T>{};
    for (std::size_t i = 0; i < gy.size(); ++i) {
      if (bv2[i] < av2[i]) {
        if (gb_on) gb[i] += gy[i];
      } else if (ga_on) {
        ga[i] += gy[i];
      }
    }
  });
}

template <typename T>
Var clamp_straight_through(Tape<T>& tape, Var x, T lo, T hi) {
  Tensor<T> out(tape.shape(x));
  const auto xv = tape.value(x).values();
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::clamp(xv[i], lo, hi);
  return tape.record(std::move(out), tape.requires_grad(x), [=](Tape<T>& t, std::span<const T> gy) {
    kernels::axpy(T(1), gy, t.grad_buffer(x));
  });
}

template <typename T>
Var concat_columns(Tape<T>& tape, Var a, Var b) {
  const Shape as = tape.shape(a);
  const Shape bs = tape.shape(b);
  require_rank(as, 2, "concat_columns", "left");
  require_rank(bs, 2, "concat_columns", "right");
  require(as[0] == bs[0], "concat_columns: batch " + std::to_string(as[0]) + " vs " + std::to_string(bs[0]));
  const std::size_t rows = as[0], fa = as[1], fb = bs[1];
  Tensor<T> out({rows, fa + fb});
  const T* ad = tape.value(a).data();
  const T* bd = tape.value(b).data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(ad + r * fa, ad + (r + 1) * fa, out.data() + r * (fa + fb));
    std::copy(bd + r * fb, bd + (r + 1) * fb, out.data() + r * (fa + fb) + fa);
  }
  return tape.record(std::move(out), any_grad(tape, {a, b}), [=](Tape<T>& t, std::span<const T> gy) {
    if (t.requires_grad(a)) {
      auto ga = t.grad_buffer(a);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < fa; ++j) ga[r * fa + j] += gy[r * (fa + fb) + j];
    }
    if (t.requires_grad(b)) {
      auto gb = t.grad_buffer(b);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < fb; ++j) gb[r * fb + j] += gy[r * (fa + fb) + fa + j];
    }
  });
}

template <typename T>
Var reshape(Tape<T>& tape, Var x, Shape shape) {
  Tensor<T> out = tape.value(x).reshaped(std::move(shape));
  return tape.record(std::move(out), tape.requires_grad(x), [=](Tape<T>& t, std::span<const T> gy) {
    kernels::axpy(T(1), gy, t.grad_buffer(x));
  });
}

template <typename T>
Var sum(Tape<T>& tape, Var x) {
  T s = 0;
  for (T v : tape.value(x).values()) s += v;
  return tape.record(Tensor<T>({1}, std::vector<T>{s}), tape.requires_grad(x),
                     [=](Tape<T>& t, std::span<const T> gy) {
                       for (T& g : t.grad_buffer(x)) g += gy[0];
                     });
}

template <typename T>
Var mean(Tape<T>& tape, Var x) {
  const std::size_t n = tape.value(x).size();
  T s = 0;
  for (T v : tape.value(x).values()) s += v;
  return tape.record(Tensor<T>({1}, std::vector<T>{s / static_cast<T>(n)}), tape.requires_grad(x),
                     [=](Tape<T>& t, std::span<const T> gy) {
                       const T g0 = gy[0] / static_cast<T>(n);
                       for (T& g : t.grad_buffer(x)) g += g0;
                     });
}

template <typename T>
Var mse(Tape<T>& tape, Var x, std::span<const T> target) {
  const auto xv = tape.value(x).values();
  require(xv.size() == target.size(), "mse: " + std::to_string(xv.size()) + " predictions vs " +
                                          std::to_string(target.size()) + " targets");
  const std::size_t n = xv.size();
  std::vector<T> diff(n);
  T s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = xv[i] - target[i];
    s += diff[i] * diff[i];
  }
  return tape.record(Tensor<T>({1}, std::vector<T>{s / static_cast<T>(n)}), tape.requires_grad(x),
                     [=, diff = std::move(diff)](Tape<T>& t, std::span<const T> gy) {
                       auto gx = t.grad_buffer(x);
                       const T c = T(2) * gy[0] / static_cast<T>(n);
                       for (std::size_t i = 0; i < n; ++i) gx[i] += c * diff[i];
                     });
}

#define DRQ_INSTANTIATE(T)                                                         \
  template Var conv2d<T>(Tape<T>&, Var, Var, Var, std::size_t);                    \
  template Var linear<T>(Tape<T>&, Var, Var, Var);                                 \
  template Var layernorm<T>(Tape<T>&, Var, Var, Var, double);                      \
  template Var relu<T>(Tape<T>&, Var);                                             \
  template Var tanh<T>(Tape<T>&, Var);                                             \
  template Var activation<T>(Tape<T>&, Var, Activation);                           \
  template Var add<T>(Tape<T>&, Var, Var);                                         \
  template Var sub<T>(Tape<T>&, Var, Var);                                         \
  template Var mul<T>(Tape<T>&, Var, Var);                                         \
  template Var scale<T>(Tape<T>&, Var, T);                                         \
  template Var add_scalar<T>(Tape<T>&, Var, T);                                    \
  template Var minimum<T>(Tape<T>&, Var, Var);                                     \
  template Var clamp_straight_through<T>(Tape<T>&, Var, T, T);                     \
  template Var concat_columns<T>(Tape<T>&, Var, Var);                              \
  template Var reshape<T>(Tape<T>&, Var, Shape);                                   \
  template Var sum<T>(Tape<T>&, Var);                                              \
  template Var mean<T>(Tape<T>&, Var);                                             \
  template Var mse<T>(Tape<T>&, Var, std::span<const T>);

DRQ_INSTANTIATE(float)
DRQ_INSTANTIATE(double)
#undef DRQ_INSTANTIATE

}  // namespace drq::nn
