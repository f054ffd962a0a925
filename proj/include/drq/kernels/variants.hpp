#pragma once

// Direct access to each kernel variant, bypassing dispatch. Used by the
// dispatch table itself and by equivalence tests.

#include <cstddef>
#include <cstdint>

#include "drq/kernels/kernels.hpp"

namespace drq::kernels {

struct KernelTable {
  void (*sgemm)(Trans, Trans, std::size_t, std::size_t, std::size_t, float, const float*,
                std::size_t, const float*, std::size_t, float, float*, std::size_t);
  void (*relu_forward)(const float*, float*, std::size_t);
  void (*relu_backward)(const float*, const float*, float*, std::size_t);
  void (*axpy)(float, const float*, float*, std::size_t);
  void (*adam_update)(float*, const float*, float*, float*, std::size_t, const AdamCoeffs&);
  void (*polyak_update)(float*, const float*, float, std::size_t);
  void (*unit_from_bytes)(const std::uint8_t*, float*, std::size_t);
  void (*shift_plane)(const float*, std::size_t, std::size_t, float, float, float*, float*);
};

namespace scalar {
template <typename T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc);
template <typename T>
void relu_forward(const T* x, T* y, std::size_t n);
template <typename T>
void relu_backward(const T* x, const T* gy, T* gx, std::size_t n);
template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n);
template <typename T>
void adam_update(T* p, const T* g, T* m, T* v, std::size_t n, const AdamCoeffs& c);
template <typename T>
void polyak_update(T* target, const T* online, T tau, std::size_t n);
template <typename T>
void unit_from_bytes(const std::uint8_t* src, T* dst, std::size_t n);
template <typename T>
void shift_plane(const T* src, std::size_t h, std::size_t w, T dx, T dy, T* dst, T* scratch);

const KernelTable& table();
}  // namespace scalar

namespace avx2 {
// Only defined when the AVX2 translation unit is built.
const KernelTable& table();
}  // namespace avx2

// Variant table for `isa`, or nullptr when this machine or build cannot run it.
const KernelTable* table_for(Isa isa);

}  // namespace drq::kernels
