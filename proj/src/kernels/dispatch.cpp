#include <atomic>
#include <cstdlib>
#include <string>

#include "drq/core/error.hpp"
#include "drq/kernels/kernels.hpp"
#include "drq/kernels/variants.hpp"

namespace drq::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(DRQ_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  Isa isa = detected_isa();
  // DRQ_ISA=scalar forces the reference kernels for a whole process.
  if (const char* forced = std::getenv("DRQ_ISA"); forced != nullptr) {
    if (std::string(forced) == "scalar") isa = Isa::kScalar;
  }
  return isa;
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{table_for(initial_isa())};
  return table;
}

std::atomic<Isa>& active_isa_slot() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

const KernelTable& k() { return *active_table().load(std::memory_order_relaxed); }

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
      return cpu_has_avx2();
  }
  return false;
}

Isa detected_isa() {
  static const Isa best = isa_supported(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
  return best;
}

const KernelTable* table_for(Isa isa) {
  if (!isa_supported(isa)) return nullptr;
  switch (isa) {
    case Isa::kScalar:
      return &scalar::table();
    case Isa::kAvx2:
#if defined(DRQ_HAVE_AVX2)
      return &avx2::table();
#else
      return nullptr;
#endif
  }
  return nullptr;
}

Isa active_isa() { return active_isa_slot().load(); }

void set_active_isa(Isa isa) {
  const KernelTable* t = table_for(isa);
  require(t != nullptr, "set_active_isa: " + std::string(isa_name(isa)) + " not supported here");
  active_table().store(t);
  active_isa_slot().store(isa);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k_, float alpha,
          const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta, float* c,
          std::size_t ldc) {
  k().sgemm(ta, tb, m, n, k_, alpha, a, lda, b, ldb, beta, c, ldc);
}
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k_, double alpha,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
          double* c, std::size_t ldc) {
  scalar::gemm<double>(ta, tb, m, n, k_, alpha, a, lda, b, ldb, beta, c, ldc);
}

void relu_forward(std::span<const float> x, std::span<float> y) {
  require(x.size() == y.size(), "relu_forward: size mismatch");
  k().relu_forward(x.data(), y.data(), x.size());
}
void relu_forward(std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), "relu_forward: size mismatch");
  scalar::relu_forward<double>(x.data(), y.data(), x.size());
}
void relu_backward(std::span<const float> x, std::span<const float> gy, std::span<float> gx) {
  require(x.size() == gy.size() && x.size() == gx.size(), "relu_backward: size mismatch");
  k().relu_backward(x.data(), gy.data(), gx.data(), x.size());
}
void relu_backward(std::span<const double> x, std::span<const double> gy, std::span<double> gx) {
  require(x.size() == gy.size() && x.size() == gx.size(), "relu_backward: size mismatch");
  scalar::relu_backward<double>(x.data(), gy.data(), gx.data(), x.size());
}

void axpy(float alpha, std::span<const float> x, std::span<float> y) {
  require(x.size() == y.size(), "axpy: size mismatch");
  k().axpy(alpha, x.data(), y.data(), x.size());
}
void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), "axpy: size mismatch");
  scalar::axpy<double>(alpha, x.data(), y.data(), x.size());
}

void adam_update(std::span<float> param, std::span<const float> grad, std::span<float> m,
                 std::span<float> v, const AdamCoeffs& c) {
  require(param.size() == grad.size() && param.size() == m.size() && param.size() == v.size(),
          "adam_update: size mismatch");
  k().adam_update(param.data(), grad.data(), m.data(), v.data(), param.size(), c);
}
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, const AdamCoeffs& c) {
  require(param.size() == grad.size() && param.size() == m.size() && param.size() == v.size(),
          "adam_update: size mismatch");
  scalar::adam_update<double>(param.data(), grad.data(), m.data(), v.data(), param.size(), c);
}

void polyak_update(std::span<float> target, std::span<const float> online, float tau) {
  require(target.size() == online.size(), "polyak_update: size mismatch");
  k().polyak_update(target.data(), online.data(), tau, target.size());
}
void polyak_update(std::span<double> target, std::span<const double> online, double tau) {
  require(target.size() == online.size(), "polyak_update: size mismatch");
  scalar::polyak_update<double>(target.data(), online.data(), tau, target.size());
}

void unit_from_bytes(std::span<const std::uint8_t> src, std::span<float> dst) {
  require(src.size() == dst.size(), "unit_from_bytes: size mismatch");
  k().unit_from_bytes(src.data(), dst.data(), src.size());
}
void unit_from_bytes(std::span<const std::uint8_t> src, std::span<double> dst) {
  require(src.size() == dst.size(), "unit_from_bytes: size mismatch");
  scalar::unit_from_bytes<double>(src.data(), dst.data(), src.size());
}

void shift_plane(const float* src, std::size_t h, std::size_t w, float dx, float dy, float* dst,
                 float* scratch) {
  k().shift_plane(src, h, w, dx, dy, dst, scratch);
}
void shift_plane(const double* src, std::size_t h, std::size_t w, double dx, double dy,
                 double* dst, double* scratch) {
  scalar::shift_plane<double>(src, h, w, dx, dy, dst, scratch);
}

}  // namespace drq::kernels
