#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "drq/augment/random_shift.hpp"
#include "drq/core/error.hpp"
#include "drq/core/parallel.hpp"
#include "drq/core/rng.hpp"
#include "drq/kernels/kernels.hpp"

using namespace drq;
using namespace drq::augment;
using nn::Shape;
using nn::Tensor;

namespace {

Tensor<float> random_batch(Shape shape, Rng& rng) {
  Tensor<float> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<float>(uniform01(rng));
  return t;
}

// Edge-clamped read of image (b, c) at integer (y, x).
double clamped(const Tensor<float>& t, std::size_t b, std::size_t c, long y, long x) {
  const long h = static_cast<long>(t.dim(2)), w = static_cast<long>(t.dim(3));
  y = std::clamp(y, 0L, h - 1);
  x = std::clamp(x, 0L, w - 1);
  return t[((b * t.dim(1) + c) * t.dim(2) + static_cast<std::size_t>(y)) * t.dim(3) + static_cast<std::size_t>(x)];
}

// Independent oracle: four-neighbour bilinear read on the clamped image.
Tensor<float> oracle_shift(const Tensor<float>& t, const std::vector<Shift>& shifts) {
  Tensor<float> out(t.shape());
  std::size_t k = 0;
  for (std::size_t b = 0; b < t.dim(0); ++b) {
    for (std::size_t c = 0; c < t.dim(1); ++c) {
      for (std::size_t i = 0; i < t.dim(2); ++i) {
        for (std::size_t j = 0; j < t.dim(3); ++j) {
          const double y = double(i) + shifts[b].dy, x = double(j) + shifts[b].dx;
          const double y0 = std::floor(y), x0 = std::floor(x);
          const double fy = y - y0, fx = x - x0;
          const long yi = static_cast<long>(y0), xi = static_cast<long>(x0);
          out[k++] = static_cast<float>((1 - fy) * ((1 - fx) * clamped(t, b, c, yi, xi) + fx * clamped(t, b, c, yi, xi + 1)) +
                                        fy * ((1 - fx) * clamped(t, b, c, yi + 1, xi) + fx * clamped(t, b, c, yi + 1, xi + 1)));
        }
      }
    }
  }
  return out;
}

float max_abs_diff(const Tensor<float>& a, const Tensor<float>& b) {
  REQUIRE(a.shape() == b.shape());
  float m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("pad_replicate examples") {
  Rng rng(1);
  const auto img = random_batch({2, 3, 5, 4}, rng);
  CHECK(pad_replicate(img, 0).storage() == img.storage());

  Tensor<float> constant({1, 2, 3, 3}, 0.625f);
  const auto padded_constant = pad_replicate(constant, 3);
  for (float v : padded_constant.values()) CHECK(v == 0.625f);

  Tensor<float> small({1, 1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  const auto p = pad_replicate(small, 1);
  CHECK(p.shape() == Shape{1, 1, 4, 4});
  CHECK(p.storage() == std::vector<float>{1, 1, 2, 2,  //
                                          1, 1, 2, 2,  //
                                          3, 3, 4, 4,  //
                                          3, 3, 4, 4});

  const auto big = pad_replicate(img, 2);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 4; ++j)
          CHECK(big[((b * 3 + c) * 9 + i + 2) * 8 + j + 2] == img[((b * 3 + c) * 5 + i) * 4 + j]);
}

TEST_CASE("bilinear_sample examples") {
  Rng rng(2);
  const auto img = random_batch({3, 2, 8, 8}, rng);
  const std::size_t pad = 4;
  const auto padded = pad_replicate(img, pad);

  std::vector<Shift> zero(3);
  CHECK(bilinear_sample(padded, zero, pad).storage() == img.storage());

  Tensor<float> constant({3, 2, 8, 8}, 0.3f);
  std::vector<Shift> frac{{1.3f, -2.7f}, {-4.0f, 4.0f}, {0.01f, 3.99f}};
  const auto sampled_constant = bilinear_sample(pad_replicate(constant, pad), frac, pad);
  for (float v : sampled_constant.values()) CHECK(v == doctest::Approx(0.3f).epsilon(1e-6));

  std::vector<Shift> integer(3, Shift{2.0f, -3.0f});
  const auto shifted = bilinear_sample(padded, integer, pad);
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j)
          REQUIRE(shifted[((b * 2 + c) * 8 + i) * 8 + j] == clamped(img, b, c, long(i) - 3, long(j) + 2));

  std::vector<Shift> too_far(3, Shift{4.5f, 0.0f});
  CHECK_THROWS_AS(bilinear_sample(padded, too_far, pad), ContractViolation);
  CHECK_THROWS_AS(apply_shifts(img, too_far, pad), ContractViolation);
  CHECK_THROWS_AS(apply_shifts_reference(img, too_far, pad), ContractViolation);
  std::vector<Shift> wrong_count(2);
  CHECK_THROWS_AS(bilinear_sample(padded, wrong_count, pad), ContractViolation);
}

TEST_CASE("integer shifts are exact edge-clamped translations on both paths") {
  Rng rng(3);
  const auto img = random_batch({6, 9, 12, 12}, rng);
  std::vector<Shift> shifts;
  for (std::size_t b = 0; b < 6; ++b)
    shifts.push_back({static_cast<float>(long(uniform_index(rng, 9)) - 4),
                      static_cast<float>(long(uniform_index(rng, 9)) - 4)});
  const auto expect = oracle_shift(img, shifts);
  CHECK(apply_shifts_reference(img, shifts, 4).storage() == expect.storage());
  CHECK(apply_shifts(img, shifts, 4).storage() == expect.storage());
}

TEST_CASE("fractional shifts match the four-neighbour oracle") {
  Rng rng(4);
  const auto img = random_batch({5, 3, 10, 13}, rng);
  const auto shifts = draw_shifts(5, 4, rng);
  const auto expect = oracle_shift(img, shifts);
  CHECK(max_abs_diff(apply_shifts_reference(img, shifts, 4), expect) <= 1e-6f);
  CHECK(max_abs_diff(apply_shifts(img, shifts, 4), expect) <= 1e-6f);
}

TEST_CASE("optimized path matches the reference on 100 random batches") {
  Rng rng(5);
  float worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto img = random_batch({4, 9, 84, 84}, rng);
    const auto shifts = draw_shifts(4, 4, rng);
    worst = std::max(worst, max_abs_diff(apply_shifts(img, shifts, 4), apply_shifts_reference(img, shifts, 4)));
  }
  CHECK(worst <= 1e-6f);
}

TEST_CASE("optimized path agrees across isa and thread settings") {
  Rng rng(6);
  const auto img = random_batch({8, 9, 21, 21}, rng);
  const auto shifts = draw_shifts(8, 4, rng);
  const auto base = apply_shifts(img, shifts, 4);
  {
    kernels::ScopedIsa scalar(kernels::Isa::kScalar);
    CHECK(max_abs_diff(apply_shifts(img, shifts, 4), base) <= 1e-6f);
  }
  set_reproducible(true);
  const auto single = apply_shifts(img, shifts, 4);
  set_reproducible(false);
  CHECK(single.storage() == base.storage());
}

TEST_CASE("random_shift examples") {
  Rng rng(7);
  const auto img = random_batch({4, 9, 16, 16}, rng);

  Rng r0(1);
  CHECK(random_shift(img, 0, r0).storage() == img.storage());
  CHECK(random_shift_reference(img, 0, r0).storage() == img.storage());

  Rng a(99), b(99);
  const auto first = random_shift(img, 4, a);
  const auto second = random_shift(img, 4, b);
  CHECK(first.storage() == second.storage());

  Rng c(99);
  const auto ref = random_shift_reference(img, 4, c);
  CHECK(max_abs_diff(first, ref) <= 1e-6f);
  CHECK(a() == c());
}

TEST_CASE("one shift per image shared across its channels") {
  Tensor<float> img({2, 9, 10, 10});
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t c = 0; c < 9; ++c)
      for (std::size_t k = 0; k < 100; ++k) img[(b * 9 + c) * 100 + k] = static_cast<float>(k) / 100.0f;
  Rng rng(8);
  const auto out = random_shift(img, 4, rng);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t c = 1; c < 9; ++c)
      for (std::size_t k = 0; k < 100; ++k) REQUIRE(out[(b * 9 + c) * 100 + k] == out[b * 900 + k]);
}

TEST_CASE("shift sampler statistics over 10000 draws") {
  Rng rng(9);
  const auto shifts = draw_shifts(10000, 4, rng);
  double mx = 0, my = 0;
  float lo = 0, hi = 0;
  for (const auto& s : shifts) {
    mx += s.dx;
    my += s.dy;
    lo = std::min({lo, s.dx, s.dy});
    hi = std::max({hi, s.dx, s.dy});
  }
  CHECK(std::abs(mx / 10000) <= 0.15);
  CHECK(std::abs(my / 10000) <= 0.15);
  CHECK(lo >= -4.0f);
  CHECK(hi <= 4.0f);
  CHECK(lo < -3.9f);
  CHECK(hi > 3.9f);
  const auto fractional = std::count_if(shifts.begin(), shifts.end(),
                                        [](const Shift& s) { return s.dx != std::floor(s.dx); });
  CHECK(fractional > 9900);
}

TEST_CASE("outputs stay in [0, 1]") {
  Rng rng(10);
  Tensor<float> img({16, 3, 12, 12});
  for (auto& v : img.values()) v = (rng() & 1) ? 1.0f : 0.0f;
  for (const auto& out : {random_shift(img, 4, rng), random_shift_reference(img, 4, rng)})
    for (float v : out.values()) {
      REQUIRE(v >= 0.0f);
      REQUIRE(v <= 1.0f);
    }
}

TEST_CASE("bilinear_sample is linear in pixel values") {
  Rng rng(11);
  const auto x = random_batch({3, 2, 9, 9}, rng);
  const auto y = random_batch({3, 2, 9, 9}, rng);
  const auto shifts = draw_shifts(3, 3, rng);
  const float a = 0.3f, b = -1.7f;
  Tensor<float> combo(x.shape());
  for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = a * x[i] + b * y[i];
  const auto lhs = bilinear_sample(pad_replicate(combo, 3), shifts, 3);
  const auto sx = bilinear_sample(pad_replicate(x, 3), shifts, 3);
  const auto sy = bilinear_sample(pad_replicate(y, 3), shifts, 3);
  for (std::size_t i = 0; i < lhs.size(); ++i) REQUIRE(std::abs(lhs[i] - (a * sx[i] + b * sy[i])) <= 1e-6f);
}

TEST_CASE("non-square frames are accepted") {
  Rng rng(12);
  const auto img = random_batch({2, 3, 7, 15}, rng);
  const auto shifts = draw_shifts(2, 2, rng);
  CHECK(max_abs_diff(apply_shifts(img, shifts, 2), oracle_shift(img, shifts)) <= 1e-6f);
}

TEST_CASE("apply_shifts_into reuses a matching output") {
  Rng rng(13);
  const auto img = random_batch({3, 9, 12, 12}, rng);
  const auto shifts = draw_shifts(3, 4, rng);
  Tensor<float> out;
  apply_shifts_into(img, shifts, 4, out);
  CHECK(out.storage() == apply_shifts(img, shifts, 4).storage());
  const float* storage = out.data();
  const auto other = draw_shifts(3, 4, rng);
  apply_shifts_into(img, other, 4, out);
  CHECK(out.data() == storage);
  CHECK(out.storage() == apply_shifts(img, other, 4).storage());

  Tensor<float> wrong({1, 1, 2, 2});
  apply_shifts_into(img, shifts, 4, wrong);
  CHECK(wrong.shape() == img.shape());
  auto same = img;
  CHECK_THROWS_AS(apply_shifts_into(same, shifts, 4, same), ContractViolation);
}
