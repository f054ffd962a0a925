#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Inner-loop kernels. Every float entry point dispatches at runtime to the
// best instruction set the CPU and build support; double entry points always
// run the scalar reference (they exist for float64 gradient checking).
namespace drq::kernels {

enum class Isa { kScalar, kAvx2 };
enum class Trans { kNo, kYes };

// Best variant available on this machine and build.
Isa detected_isa();
Isa active_isa();
// Throws ContractViolation when the CPU or build cannot run `isa`.
void set_active_isa(Isa isa);
bool isa_supported(Isa isa);
std::string_view isa_name(Isa isa);

// RAII override used by equivalence tests and benchmarks.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : previous_(active_isa()) { set_active_isa(isa); }
  ~ScopedIsa() { set_active_isa(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

// Row-major C = alpha * op(A) * op(B) + beta * C, with op(A) m x k and
// op(B) k x n. beta == 0 overwrites C without reading it.
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
          const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta, float* c,
          std::size_t ldc);
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
          double* c, std::size_t ldc);

// y = max(x, 0)
void relu_forward(std::span<const float> x, std::span<float> y);
void relu_forward(std::span<const double> x, std::span<double> y);
// gx += gy where x > 0
void relu_backward(std::span<const float> x, std::span<const float> gy, std::span<float> gx);
void relu_backward(std::span<const double> x, std::span<const double> gy, std::span<double> gx);

// y += alpha * x
void axpy(float alpha, std::span<const float> x, std::span<float> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double eps;
  // 1 - beta^step for the step being applied.
  double bias_correction1;
  double bias_correction2;
};

// One bias-corrected Adam step over flat buffers.
void adam_update(std::span<float> param, std::span<const float> grad, std::span<float> m,
                 std::span<float> v, const AdamCoeffs& c);
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, const AdamCoeffs& c);

// target = (1 - tau) * target + tau * online
void polyak_update(std::span<float> target, std::span<const float> online, float tau);
void polyak_update(std::span<double> target, std::span<const double> online, double tau);

// 8-bit intensities to [0, 1].
void unit_from_bytes(std::span<const std::uint8_t> src, std::span<float> dst);
void unit_from_bytes(std::span<const std::uint8_t> src, std::span<double> dst);

// Bilinear resampling of one h x w plane displaced by (dx, dy), with
// out-of-range reads clamped to the nearest edge (equivalent to sampling a
// replicate-padded image). Output pixel (i, j) reads source coordinate
// (i + dy, j + dx). `scratch` must hold h * w values.
void shift_plane(const float* src, std::size_t h, std::size_t w, float dx, float dy, float* dst,
                 float* scratch);
void shift_plane(const double* src, std::size_t h, std::size_t w, double dx, double dy,
                 double* dst, double* scratch);

}  // namespace drq::kernels
