//===- test_vecmath.cc - elemental function properties ----------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "doctest.h"
#include "wgkit/vecmath.hpp"

#include <cmath>
#include <random>

using namespace wgkit::vecmath;

namespace {

float f32_bits(uint32_t b) { return FloatTraits<float>::from_bits(b); }
uint32_t bits_f32(float v) { return FloatTraits<float>::to_bits(v); }

const float kInf32 = std::numeric_limits<float>::infinity();
const double kInf64 = std::numeric_limits<double>::infinity();

} // namespace

TEST_CASE("fabs clears exactly the sign bit") {
  CHECK(fabs_scalar(-3.5f) == 3.5f);
  CHECK(bits_f32(fabs_scalar(-0.0f)) == 0u); // bit-exact +0
  // NaN payload preserved, sign cleared
  float nan_neg = f32_bits(0xffc00123u);
  CHECK(bits_f32(fabs_scalar(nan_neg)) == 0x7fc00123u);
  CHECK(fabs_scalar(-kInf64) == kInf64);
}

TEST_CASE("signbit and isnan are raw bit tests") {
  CHECK(signbit_scalar(-0.0f));
  CHECK(!signbit_scalar(0.0f));
  CHECK(signbit_scalar(-0.0));
  CHECK(!isnan_scalar(kInf32));
  CHECK(!isnan_scalar(-kInf64));
  CHECK(isnan_scalar(f32_bits(0x7fc00000u))); // 0/0 pattern
  CHECK(isnan_scalar(std::nan("")));
  CHECK(!isnan_scalar(1.0f));
}

TEST_CASE("special-case table") {
  // sqrt
  CHECK(bits_f32(sqrt_scalar(0.0f)) == bits_f32(0.0f));
  CHECK(bits_f32(sqrt_scalar(-0.0f)) == bits_f32(-0.0f));
  CHECK(sqrt_scalar(kInf32) == kInf32);
  CHECK(isnan_scalar(sqrt_scalar(-1.0f)));
  CHECK(isnan_scalar(sqrt_scalar(-kInf64)));
  CHECK(isnan_scalar(sqrt_scalar(std::nan(""))));
  // sin
  CHECK(bits_f32(sin_scalar(0.0f)) == bits_f32(0.0f));
  CHECK(bits_f32(sin_scalar(-0.0f)) == bits_f32(-0.0f));
  CHECK(isnan_scalar(sin_scalar(kInf32)));
  CHECK(isnan_scalar(sin_scalar(-kInf64)));
  CHECK(isnan_scalar(sin_scalar(std::nan(""))));
  // exp
  CHECK(exp_scalar(0.0f) == 1.0f);
  CHECK(exp_scalar(-0.0) == 1.0);
  CHECK(exp_scalar(kInf32) == kInf32);
  CHECK(exp_scalar(-kInf64) == 0.0);
  CHECK(isnan_scalar(exp_scalar(std::nan(""))));
  // overflow and underflow
  CHECK(exp_scalar(1000.0f) == kInf32);
  CHECK(exp_scalar(-1000.0) == 0.0);
}

TEST_CASE("anchor values") {
  CHECK(sqrt_scalar(4.0f) == 2.0f);
  CHECK(sqrt_scalar(4.0) == 2.0);
  CHECK(ulp_error_f64(sqrt_scalar(2.0), sqrtl(2.0l)) <= 2.0);
  CHECK(ulp_error_f32(sqrt_scalar(2.0f), sqrtl(2.0l)) <= 2.0);
  CHECK(sin_scalar(0.0) == 0.0);
  CHECK(ulp_error_f64(sin_scalar(double(M_PI_2)), sinl((long double)M_PI_2)) <= 4.0);
  CHECK(ulp_error_f64(sin_scalar(1.0), sinl(1.0l)) <= 4.0);
  CHECK(ulp_error_f32(sin_scalar(1.0f), sinl(1.0l)) <= 4.0);
  CHECK(exp_scalar(0.0) == 1.0);
  CHECK(ulp_error_f64(exp_scalar(1.0), expl(1.0l)) <= 4.0);
  CHECK(ulp_error_f32(exp_scalar(1.0f), expl(1.0l)) <= 4.0);
  CHECK(ulp_error_f64(exp_scalar(double(M_LN2)), expl((long double)M_LN2)) <= 4.0);
}

TEST_CASE("ulp bounds over random samples") {
  std::mt19937_64 rng(11);
  auto uni = [&](double lo, double hi) {
    return lo + (hi - lo) * double(rng()) / double(UINT64_MAX);
  };
  const int n = 50000; // the acceptance suite runs the full million
  double worst = 0;
  for (int i = 0; i < n; ++i) {
    double x = uni(-1e4, 1e4);
    worst = std::max(worst, ulp_error_f64(sin_scalar(x), sinl((long double)x)));
    float xf = float(x);
    worst = std::max(worst, ulp_error_f32(sin_scalar(xf), sinl((long double)xf)));
  }
  CHECK(worst <= 4.0);
  worst = 0;
  for (int i = 0; i < n; ++i) {
    double x = uni(-700, 700);
    worst = std::max(worst, ulp_error_f64(exp_scalar(x), expl((long double)x)));
    float xf = float(uni(-85, 85));
    worst = std::max(worst, ulp_error_f32(exp_scalar(xf), expl((long double)xf)));
  }
  CHECK(worst <= 4.0);
  worst = 0;
  for (int i = 0; i < n; ++i) {
    double x = std::exp(uni(-300.0, 300.0));
    worst = std::max(worst, ulp_error_f64(sqrt_scalar(x), sqrtl((long double)x)));
    float xf = float(std::exp(uni(-30.0, 30.0)));
    worst = std::max(worst, ulp_error_f32(sqrt_scalar(xf), sqrtl((long double)xf)));
  }
  CHECK(worst <= 2.0);
}

TEST_CASE("newton iteration at least doubles the accurate digits") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    double x = 0.25 + 3.75 * double(rng()) / double(UINT64_MAX);
    auto it = sqrt_newton_iterates(x);
    long double ref = sqrtl((long double)x);
    REQUIRE(it.size() >= 3);
    for (size_t j = 0; j + 1 < it.size(); ++j) {
      long double e0 = fabsl((long double)it[j] - ref) / ref;
      long double e1 = fabsl((long double)it[j + 1] - ref) / ref;
      if ((double)e0 < 1e-14)
        break; // at the precision floor, rounding dominates
      // doubling digits means e1 <= e0^2, with slack for rounding
      CHECK((double)e1 <= std::max((double)(e0 * e0) * 4.0, 1e-15));
    }
  }
}

TEST_CASE("lane independence is bit-exact at every width") {
  std::mt19937_64 rng(17);
  auto sample = [&](int i) {
    double m = double(rng()) / double(UINT64_MAX);
    switch (i % 3) {
    case 0: return m * 2e4 - 1e4;         // sin range
    case 1: return m * 160.0 - 80.0;      // exp range
    default: return std::exp(m * 40 - 20); // sqrt range
    }
  };
  auto run_width = [&](auto tag, auto width_tag) {
    using T = decltype(tag);
    constexpr int W = decltype(width_tag)::value;
    for (int rep = 0; rep < 1500; ++rep) {
      RealVec<T, W> v;
      for (int i = 0; i < W; ++i)
        v.lane[size_t(i)] = T(sample(rep + i));
      RealVec<T, W> s = vsin(v), e = vexp(v), q = vsqrt(vfabs(v)), a = vfabs(v);
      for (int i = 0; i < W; ++i) {
        using FT = FloatTraits<T>;
        CHECK(FT::to_bits(s[i]) == FT::to_bits(sin_scalar(v[i])));
        CHECK(FT::to_bits(e[i]) == FT::to_bits(exp_scalar(v[i])));
        CHECK(FT::to_bits(q[i]) == FT::to_bits(sqrt_scalar(fabs_scalar(v[i]))));
        CHECK(FT::to_bits(a[i]) == FT::to_bits(fabs_scalar(v[i])));
      }
    }
  };
  run_width(float{}, std::integral_constant<int, 1>{});
  run_width(float{}, std::integral_constant<int, 2>{});
  run_width(float{}, std::integral_constant<int, 4>{});
  run_width(float{}, std::integral_constant<int, 8>{});
  run_width(double{}, std::integral_constant<int, 1>{});
  run_width(double{}, std::integral_constant<int, 2>{});
  run_width(double{}, std::integral_constant<int, 4>{});
  run_width(double{}, std::integral_constant<int, 8>{});
}

TEST_CASE("width 8 is the concatenation of two width-4 halves") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 2000; ++rep) {
    RealVec<float, 8> v;
    for (int i = 0; i < 8; ++i)
      v.lane[size_t(i)] = float(double(rng()) / double(UINT64_MAX) * 2e4 - 1e4);
    RealVec<float, 4> lo, hi;
    for (int i = 0; i < 4; ++i) {
      lo.lane[size_t(i)] = v[i];
      hi.lane[size_t(i)] = v[i + 4];
    }
    auto full = vsin(v);
    auto l = vsin(lo), h = vsin(hi);
    for (int i = 0; i < 4; ++i) {
      CHECK(bits_f32(full[i]) == bits_f32(l[i]));
      CHECK(bits_f32(full[i + 4]) == bits_f32(h[i]));
    }
  }
}

TEST_CASE("width 2 runs via extension and padding is unobservable") {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 2000; ++rep) {
    RealVec<double, 2> v;
    v.lane[0] = double(rng()) / double(UINT64_MAX) * 100 - 50;
    v.lane[1] = double(rng()) / double(UINT64_MAX) * 100 - 50;
    auto r = vexp(v);
    CHECK(FloatTraits<double>::to_bits(r[0]) ==
          FloatTraits<double>::to_bits(exp_scalar(v[0])));
    CHECK(FloatTraits<double>::to_bits(r[1]) ==
          FloatTraits<double>::to_bits(exp_scalar(v[1])));
  }
}

TEST_CASE("denormal inputs to sqrt stay accurate") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 2000; ++i) {
    float x = f32_bits(uint32_t(rng() % 0x007fffffu) + 1); // denormal
    CHECK(ulp_error_f32(sqrt_scalar(x), sqrtl((long double)x)) <= 2.0);
  }
}
