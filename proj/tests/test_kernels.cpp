#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "drq/core/error.hpp"
#include "drq/core/rng.hpp"
#include "drq/kernels/kernels.hpp"
#include "drq/kernels/variants.hpp"

using namespace drq;
using namespace drq::kernels;

namespace {

std::vector<float> random_floats(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(uniform(rng, lo, hi));
  return v;
}

// Plain triple loop in double, the oracle for both variants.
void naive_gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
                const std::vector<float>& a, std::size_t lda, const std::vector<float>& b,
                std::size_t ldb, double beta, std::vector<double>& c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ta == Trans::kNo ? a[i * lda + p] : a[p * lda + i];
        const double bv = tb == Trans::kNo ? b[p * ldb + j] : b[j * ldb + p];
        acc += av * bv;
      }
      const double prior = beta == 0.0 ? 0.0 : beta * c[i * ldc + j];
      c[i * ldc + j] = alpha * acc + prior;
    }
  }
}

const KernelTable* avx2_or_skip() {
  const KernelTable* t = table_for(Isa::kAvx2);
  if (!t) MESSAGE("AVX2 variant unavailable; equivalence checked against scalar only");
  return t;
}

}  // namespace

TEST_CASE("dispatch reports a usable isa and honours overrides") {
  CHECK(isa_supported(Isa::kScalar));
  CHECK(isa_supported(active_isa()));
  {
    ScopedIsa scoped(Isa::kScalar);
    CHECK(active_isa() == Isa::kScalar);
  }
  CHECK(isa_name(Isa::kScalar) == "scalar");
  if (!isa_supported(Isa::kAvx2)) CHECK_THROWS_AS(set_active_isa(Isa::kAvx2), ContractViolation);
}

TEST_CASE("gemm variants match a naive double oracle") {
  Rng rng(7);
  const std::size_t sizes[][3] = {{1, 1, 1}, {3, 5, 7},   {8, 8, 8},   {17, 31, 9},
                                  {64, 33, 65}, {5, 129, 3}, {100, 7, 300}};
  const Trans modes[] = {Trans::kNo, Trans::kYes};
  std::vector<const KernelTable*> tables{table_for(Isa::kScalar)};
  if (const auto* t = avx2_or_skip()) tables.push_back(t);

  for (const auto& s : sizes) {
    const std::size_t m = s[0], n = s[1], k = s[2];
    for (Trans ta : modes) {
      for (Trans tb : modes) {
        for (float beta : {0.0f, 0.5f}) {
          const std::size_t lda = (ta == Trans::kNo ? k : m) + 2;
          const std::size_t ldb = (tb == Trans::kNo ? n : k) + 1;
          const std::size_t ldc = n + 3;
          const std::size_t arows = ta == Trans::kNo ? m : k;
          const std::size_t brows = tb == Trans::kNo ? k : n;
          auto a = random_floats(arows * lda, rng);
          auto b = random_floats(brows * ldb, rng);
          auto c0 = random_floats(m * ldc, rng);
          std::vector<double> expect(c0.begin(), c0.end());
          naive_gemm(ta, tb, m, n, k, 1.25, a, lda, b, ldb, beta, expect, ldc);
          for (const auto* table : tables) {
            auto c = c0;
            table->sgemm(ta, tb, m, n, k, 1.25f, a.data(), lda, b.data(), ldb, beta, c.data(), ldc);
            for (std::size_t i = 0; i < m; ++i)
              for (std::size_t j = 0; j < n; ++j)
                REQUIRE(c[i * ldc + j] ==
                        doctest::Approx(expect[i * ldc + j]).epsilon(1e-4).scale(1.0));
          }
        }
      }
    }
  }
}

TEST_CASE("gemm with beta zero ignores NaN garbage in C") {
  std::vector<float> a{1, 2, 3, 4}, b{1, 0, 0, 1};
  for (Isa isa : {Isa::kScalar, Isa::kAvx2}) {
    if (!isa_supported(isa)) continue;
    ScopedIsa scoped(isa);
    std::vector<float> c(4, std::nanf(""));
    gemm(Trans::kNo, Trans::kNo, 2, 2, 2, 1.0f, a.data(), 2, b.data(), 2, 0.0f, c.data(), 2);
    CHECK(c == a);
  }
}

TEST_CASE("double gemm matches the oracle") {
  Rng rng(3);
  const std::size_t m = 6, n = 5, k = 4;
  auto af = random_floats(m * k, rng);
  auto bf = random_floats(k * n, rng);
  std::vector<double> a(af.begin(), af.end()), b(bf.begin(), bf.end()), c(m * n, 0.0);
  std::vector<double> expect(m * n, 0.0);
  naive_gemm(Trans::kNo, Trans::kNo, m, n, k, 1.0, af, k, bf, n, 0.0, expect, n);
  gemm(Trans::kNo, Trans::kNo, m, n, k, 1.0, a.data(), k, b.data(), n, 0.0, c.data(), n);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(expect[i]).epsilon(1e-14));
}

TEST_CASE("elementwise kernels agree bitwise across variants") {
  const KernelTable* s = table_for(Isa::kScalar);
  const KernelTable* v = avx2_or_skip();
  if (!v) return;
  Rng rng(11);
  for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 31u, 1000u}) {
    auto x = random_floats(n, rng);
    auto gy = random_floats(n, rng);

    std::vector<float> y1(n), y2(n);
    s->relu_forward(x.data(), y1.data(), n);
    v->relu_forward(x.data(), y2.data(), n);
    CHECK(y1 == y2);

    auto g1 = random_floats(n, rng);
    auto g2 = g1;
    s->relu_backward(x.data(), gy.data(), g1.data(), n);
    v->relu_backward(x.data(), gy.data(), g2.data(), n);
    CHECK(g1 == g2);

    auto p1 = random_floats(n, rng);
    auto p2 = p1;
    s->polyak_update(p1.data(), x.data(), 0.01f, n);
    v->polyak_update(p2.data(), x.data(), 0.01f, n);
    for (std::size_t i = 0; i < n; ++i) CHECK(p1[i] == doctest::Approx(p2[i]).epsilon(1e-6));

    auto a1 = random_floats(n, rng);
    auto a2 = a1;
    s->axpy(0.3f, x.data(), a1.data(), n);
    v->axpy(0.3f, x.data(), a2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(a1[i] == doctest::Approx(a2[i]).epsilon(1e-6));

    std::vector<std::uint8_t> bytes(n);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng() & 0xFF);
    std::vector<float> u1(n), u2(n);
    s->unit_from_bytes(bytes.data(), u1.data(), n);
    v->unit_from_bytes(bytes.data(), u2.data(), n);
    CHECK(u1 == u2);
  }
}

TEST_CASE("relu kernels follow the definition") {
  std::vector<float> x{-2.0f, 0.0f, 3.0f}, y(3), g{1.0f, 1.0f, 1.0f}, gx(3, 0.5f);
  relu_forward(x, y);
  CHECK(y == std::vector<float>{0.0f, 0.0f, 3.0f});
  relu_backward(std::span<const float>(x), g, gx);
  CHECK(gx == std::vector<float>{0.5f, 0.5f, 1.5f});
}

TEST_CASE("unit_from_bytes spans [0, 1]") {
  std::vector<std::uint8_t> b{0, 128, 255};
  std::vector<float> f(3);
  unit_from_bytes(b, f);
  CHECK(f[0] == 0.0f);
  CHECK(f[1] == doctest::Approx(128.0 / 255.0));
  CHECK(f[2] == 1.0f);
}

TEST_CASE("adam variants agree and match a scalar recurrence") {
  const KernelTable* s = table_for(Isa::kScalar);
  const KernelTable* v = avx2_or_skip();
  Rng rng(5);
  const std::size_t n = 37;
  auto p0 = random_floats(n, rng);
  auto g = random_floats(n, rng);
  AdamCoeffs c{1e-3, 0.9, 0.999, 1e-8, 1.0 - 0.9, 1.0 - 0.999};

  auto p1 = p0;
  std::vector<float> m1(n, 0.0f), v1(n, 0.0f);
  s->adam_update(p1.data(), g.data(), m1.data(), v1.data(), n, c);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = 0.1 * g[i], vv = 0.001 * double(g[i]) * g[i];
    const double expect = p0[i] - 1e-3 * (m / 0.1) / (std::sqrt(vv / 0.001) + 1e-8);
    CHECK(p1[i] == doctest::Approx(expect).epsilon(1e-6));
  }
  if (!v) return;
  auto p2 = p0;
  std::vector<float> m2(n, 0.0f), v2(n, 0.0f);
  v->adam_update(p2.data(), g.data(), m2.data(), v2.data(), n, c);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(p1[i] == doctest::Approx(p2[i]).epsilon(1e-6));
    CHECK(m1[i] == doctest::Approx(m2[i]).epsilon(1e-6));
    CHECK(v1[i] == doctest::Approx(v2[i]).epsilon(1e-6));
  }
}

TEST_CASE("shift_plane variants agree within 1e-6") {
  const KernelTable* s = table_for(Isa::kScalar);
  const KernelTable* v = avx2_or_skip();
  if (!v) return;
  Rng rng(13);
  for (std::size_t trial = 0; trial < 200; ++trial) {
    const std::size_t h = 1 + uniform_index(rng, 20), w = 1 + uniform_index(rng, 40);
    auto src = random_floats(h * w, rng, 0.0, 1.0);
    const float dx = static_cast<float>(uniform(rng, -4, 4));
    const float dy = static_cast<float>(uniform(rng, -4, 4));
    std::vector<float> d1(h * w), d2(h * w), scratch(h * w);
    s->shift_plane(src.data(), h, w, dx, dy, d1.data(), scratch.data());
    v->shift_plane(src.data(), h, w, dx, dy, d2.data(), scratch.data());
    for (std::size_t i = 0; i < h * w; ++i) REQUIRE(std::abs(d1[i] - d2[i]) <= 1e-6f);
  }
}

TEST_CASE("shift_plane integer shift is an edge-clamped translation") {
  const std::size_t h = 5, w = 6;
  std::vector<double> src(h * w);
  for (std::size_t i = 0; i < src.size(); ++i) src[i] = static_cast<double>(i);
  std::vector<double> dst(h * w), scratch(h * w);
  shift_plane(src.data(), h, w, 2.0, -1.0, dst.data(), scratch.data());
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const auto si = static_cast<std::size_t>(std::clamp<long>(long(i) - 1, 0, long(h) - 1));
      const auto sj = static_cast<std::size_t>(std::clamp<long>(long(j) + 2, 0, long(w) - 1));
      CHECK(dst[i * w + j] == src[si * w + sj]);
    }
  }
}
