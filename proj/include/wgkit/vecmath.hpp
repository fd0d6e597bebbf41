//===- vecmath.hpp - vectorized elemental functions ---------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Fixed-width real vectors with lane-wise elemental functions. Widths the
// generic kernels do not provide natively are realized transparently: width
// 8 splits into two width-4 halves, width 2 extends to width 4 with unused
// padding lanes, width 1 is the scalar path. Per-lane results are bit-equal
// to the scalar function no matter the width.
//
// The algorithms follow the generic (intrinsic-free) route: bit manipulation
// for fabs/signbit/isnan, an exponent-halving seed plus Newton iteration for
// sqrt, and range reduction followed by minimax polynomials for sin and exp.
//
//===----------------------------------------------------------------------===//

#ifndef WGKIT_VECMATH_HPP
#define WGKIT_VECMATH_HPP

#include <array>
#include <cstdint>
#include <cstring>
#include <vector>

namespace wgkit::vecmath {

template <class T> struct FloatTraits;

template <> struct FloatTraits<float> {
  using uint_t = uint32_t;
  static constexpr int mantissa_bits = 23;
  static constexpr int exponent_bits = 8;
  static constexpr int bias = 127;
  static constexpr uint32_t sign_mask = 0x80000000u;
  static constexpr uint32_t exponent_mask = 0x7f800000u;
  static constexpr uint32_t mantissa_mask = 0x007fffffu;
  static uint32_t to_bits(float v) {
    uint32_t b;
    std::memcpy(&b, &v, 4);
    return b;
  }
  static float from_bits(uint32_t b) {
    float v;
    std::memcpy(&v, &b, 4);
    return v;
  }
};

template <> struct FloatTraits<double> {
  using uint_t = uint64_t;
  static constexpr int mantissa_bits = 52;
  static constexpr int exponent_bits = 11;
  static constexpr int bias = 1023;
  static constexpr uint64_t sign_mask = 0x8000000000000000ull;
  static constexpr uint64_t exponent_mask = 0x7ff0000000000000ull;
  static constexpr uint64_t mantissa_mask = 0x000fffffffffffffull;
  static uint64_t to_bits(double v) {
    uint64_t b;
    std::memcpy(&b, &v, 8);
    return b;
  }
  static double from_bits(uint64_t b) {
    double v;
    std::memcpy(&v, &b, 8);
    return v;
  }
};

// Scalar kernels (the generic algorithms).
float fabs_scalar(float x);
double fabs_scalar(double x);
bool signbit_scalar(float x);
bool signbit_scalar(double x);
bool isnan_scalar(float x);
bool isnan_scalar(double x);
float sqrt_scalar(float x);
double sqrt_scalar(double x);
float sin_scalar(float x);
double sin_scalar(double x);
float exp_scalar(float x);
double exp_scalar(double x);

// Newton iterate sequence for the convergence property (seed first).
std::vector<float> sqrt_newton_iterates(float x);
std::vector<double> sqrt_newton_iterates(double x);

template <class T, int W> struct RealVec {
  static_assert(W == 1 || W == 2 || W == 4 || W == 8, "unsupported width");
  std::array<T, W> lane{};

  T &operator[](int i) { return lane[size_t(i)]; }
  T operator[](int i) const { return lane[size_t(i)]; }
  bool bit_equal(const RealVec &o) const {
    using FT = FloatTraits<T>;
    for (int i = 0; i < W; ++i)
      if (FT::to_bits(lane[size_t(i)]) != FT::to_bits(o.lane[size_t(i)]))
        return false;
    return true;
  }
};

template <class T, int W> struct BoolVec {
  std::array<bool, W> lane{};
  bool operator[](int i) const { return lane[size_t(i)]; }
};

namespace detail {

template <class T> T apply_scalar(T (*f)(T), T x) { return f(x); }

// Width dispatch: 8 -> two 4-halves, 2 -> widened to 4 with padding, 4 and 1
// run the kernel directly.
template <class T, int W, class F>
RealVec<T, W> lift(F &&kernel4, T (*scalar)(T), const RealVec<T, W> &x) {
  if constexpr (W == 8) {
    RealVec<T, 4> lo, hi;
    for (int i = 0; i < 4; ++i) {
      lo.lane[size_t(i)] = x.lane[size_t(i)];
      hi.lane[size_t(i)] = x.lane[size_t(i + 4)];
    }
    RealVec<T, 4> rl = lift<T, 4>(kernel4, scalar, lo);
    RealVec<T, 4> rh = lift<T, 4>(kernel4, scalar, hi);
    RealVec<T, 8> out;
    for (int i = 0; i < 4; ++i) {
      out.lane[size_t(i)] = rl.lane[size_t(i)];
      out.lane[size_t(i + 4)] = rh.lane[size_t(i)];
    }
    return out;
  } else if constexpr (W == 2) {
    RealVec<T, 4> wide;
    wide.lane = {x.lane[0], x.lane[1], T(1), T(1)}; // padding lanes
    RealVec<T, 4> r = lift<T, 4>(kernel4, scalar, wide);
    RealVec<T, 2> out;
    out.lane = {r.lane[0], r.lane[1]};
    return out;
  } else if constexpr (W == 1) {
    RealVec<T, 1> out;
    out.lane[0] = scalar(x.lane[0]);
    return out;
  } else {
    return kernel4(x);
  }
}

template <class T, int W>
RealVec<T, W> lanewise(T (*f)(T), const RealVec<T, W> &x) {
  auto kernel4 = [f](const RealVec<T, 4> &v) {
    RealVec<T, 4> out;
    for (int i = 0; i < 4; ++i)
      out.lane[size_t(i)] = f(v.lane[size_t(i)]);
    return out;
  };
  return lift<T, W>(kernel4, f, x);
}

} // namespace detail

template <class T, int W> RealVec<T, W> vfabs(const RealVec<T, W> &x) {
  return detail::lanewise<T, W>(static_cast<T (*)(T)>(fabs_scalar), x);
}

template <class T, int W> RealVec<T, W> vsqrt(const RealVec<T, W> &x) {
  return detail::lanewise<T, W>(static_cast<T (*)(T)>(sqrt_scalar), x);
}

template <class T, int W> RealVec<T, W> vsin(const RealVec<T, W> &x) {
  return detail::lanewise<T, W>(static_cast<T (*)(T)>(sin_scalar), x);
}

template <class T, int W> RealVec<T, W> vexp(const RealVec<T, W> &x) {
  return detail::lanewise<T, W>(static_cast<T (*)(T)>(exp_scalar), x);
}

template <class T, int W> BoolVec<T, W> vsignbit(const RealVec<T, W> &x) {
  BoolVec<T, W> out;
  for (int i = 0; i < W; ++i)
    out.lane[size_t(i)] = signbit_scalar(x.lane[size_t(i)]);
  return out;
}

template <class T, int W> BoolVec<T, W> visnan(const RealVec<T, W> &x) {
  BoolVec<T, W> out;
  for (int i = 0; i < W; ++i)
    out.lane[size_t(i)] = isnan_scalar(x.lane[size_t(i)]);
  return out;
}

// ulp distance between a computed value and an extended-precision reference,
// in units of the reference's ulp in T precision. Infinite results that the
// reference rounds to count as exact.
double ulp_error_f32(float computed, long double reference);
double ulp_error_f64(double computed, long double reference);

} // namespace wgkit::vecmath

#endif // WGKIT_VECMATH_HPP
