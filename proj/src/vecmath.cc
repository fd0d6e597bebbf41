//===- vecmath.cc - scalar kernels for the vector math ------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// sin uses the two-stage reduction: periodicity brings the argument into
// [0, 2pi), the sine symmetries fold it into [0, pi/2], and a minimax
// polynomial finishes. The reduction runs in compensated double-double
// arithmetic so the folded argument is correct to a final rounding even
// close to the zeros of sine; the documented input range is |x| <= 1e4.
//
// exp reduces against ln2 (x = k*ln2 + r, |r| <= ln2/2) with a split
// constant, evaluates a minimax polynomial for e^r and rescales by 2^k via
// exponent arithmetic.
//
// sqrt seeds Newton's iteration by halving the exponent with an integer
// shift; each step doubles the accurate digits, so a fixed iteration count
// reaches the target precision (3 for f32, 4 for f64).
//
// The polynomial coefficients come from tools/minimax_gen.py (Remez fits)
// and are checked in as hex-exact constants. The fitted degrees: sin needs
// degree 9 (f32) and degree 15 (f64) over [0, pi/2] to stay within the ulp
// budget; exp uses degree 6 (f32) and degree 11 (f64).
//
//===----------------------------------------------------------------------===//

#include "wgkit/vecmath.hpp"

#include <cmath>
#include <limits>

namespace wgkit::vecmath {

namespace {

//===----------------------------------------------------------------------===//
// Compensated arithmetic helpers
//===----------------------------------------------------------------------===//

struct DD {
  double hi = 0, lo = 0;
};

DD two_sum(double a, double b) {
  double s = a + b;
  double bb = s - a;
  double err = (a - (s - bb)) + (b - bb);
  return DD{s, err};
}

DD dd_add(DD a, double b) {
  DD s = two_sum(a.hi, b);
  double lo = a.lo + s.lo;
  DD out = two_sum(s.hi, lo);
  return out;
}

DD dd_add(DD a, DD b) {
  DD s = two_sum(a.hi, b.hi);
  double lo = a.lo + b.lo + s.lo;
  return two_sum(s.hi, lo);
}

// exact product via fma
DD two_prod(double a, double b) {
  double p = a * b;
  double err = std::fma(a, b, -p);
  return DD{p, err};
}

//===----------------------------------------------------------------------===//
// Constants
//===----------------------------------------------------------------------===//

// 2*pi split for exact partial products with quotients up to 2^14: the top
// two pieces carry 33 mantissa bits each, the tail completes ~178 bits.
const double kTwoPiA = 0x1.921fb54400000p+2;
const double kTwoPiB = 0x1.0b4611a600000p-32;
const double kTwoPiC = 0x1.3198a2e037073p-67;
const double kTwoPiD = 0x1.129024e088a68p-121;
const double kInvTwoPi = 0x1.45f306dc9c883p-3;

// pi and 2*pi as double-double for the symmetry folds
const double kPiHi = 0x1.921fb54442d18p+1;
const double kPiLo = 0x1.1a62633145c07p-53;
const double kHalfPiHi = 0x1.921fb54442d18p+0;
const double kThreeHalfPiHi = 0x1.2d97c7f3321d2p+2;
const double kTwoPiHi = 0x1.921fb54442d18p+2;
const double kTwoPiLo = 0x1.1a62633145c07p-52;

// ln2 split (the head has 20 trailing zero bits) and 1/ln2
const double kLn2Hi = 0x1.62e42fef00000p-1;
const double kLn2Lo = 0x1.473de6af278edp-34;
const double kInvLn2 = 0x1.71547652b82fep+0;

// minimax tables from tools/minimax_gen.py
const float kSinF32[5] = {
    0x1.0000000000000p+0f, -0x1.5555480000000p-3f, 0x1.110e7c0000000p-7f,
    -0x1.9f64460000000p-13f, 0x1.5d38b60000000p-19f};

const double kSinF64[8] = {
    0x1.fffffffffffffp-1,  -0x1.5555555555459p-3, 0x1.1111111108fc9p-7,
    -0x1.a01a0199c0723p-13, 0x1.71de37de50206p-19, -0x1.ae634b1807f30p-26,
    0x1.60e55578d04d9p-33, -0x1.9eee71e9e88e5p-41};

const float kExpF32[7] = {
    0x1.0000000000000p+0f, 0x1.0000000000000p+0f, 0x1.fffffa0000000p-2f,
    0x1.55540a0000000p-3f, 0x1.55589a0000000p-5f, 0x1.126d0c0000000p-7f,
    0x1.6ab9800000000p-10f};

const double kExpF64[12] = {
    0x1.0000000000000p+0,  0x1.0000000000000p+0,  0x1.0000000000010p-1,
    0x1.55555555554a2p-3,  0x1.555555554f370p-5,  0x1.1111111130dd5p-7,
    0x1.6c16c18781105p-10, 0x1.a01a0110576fcp-13, 0x1.a01992d102296p-16,
    0x1.71df4520100a1p-19, 0x1.28b311c4abb3bp-22, 0x1.ad661d8a99f75p-26};

//===----------------------------------------------------------------------===//
// sin: reduce to [0,2pi), fold to [0,pi/2], minimax polynomial
//===----------------------------------------------------------------------===//

// |x| <= 1e4 reduced by n*2pi with exact partial products; hi+lo carries the
// residue to well below one ulp of even the worst-case tiny fold result.
DD reduce_two_pi(double ax) {
  double n = std::floor(ax * kInvTwoPi);
  // the first two products are exact: n < 2^14, constants have 30-bit
  // mantissas; the subtractions stay exact by Sterbenz-style cancellation
  DD acc = two_sum(ax, -n * kTwoPiA);
  acc = dd_add(acc, -n * kTwoPiB);
  DD p3 = two_prod(n, kTwoPiC);
  acc = dd_add(acc, DD{-p3.hi, -p3.lo});
  acc = dd_add(acc, -n * kTwoPiD);
  return acc;
}

// sign-salvaged fold into [0, pi/2] using sin's symmetries; the identities
// hold globally, so boundary misclassification by an ulp is harmless.
double folded_sin_arg(DD y, int &sign) {
  sign = +1;
  if (y.hi <= kHalfPiHi)
    return y.hi + y.lo;
  if (y.hi <= kPiHi) { // sin(pi - y) = sin(y)
    DD t = dd_add(DD{kPiHi, kPiLo}, DD{-y.hi, -y.lo});
    return t.hi + t.lo;
  }
  if (y.hi <= kThreeHalfPiHi) { // sin(y) = -sin(y - pi)
    sign = -1;
    DD t = dd_add(y, DD{-kPiHi, -kPiLo});
    return t.hi + t.lo;
  }
  sign = -1; // sin(y) = -sin(2pi - y)
  DD t = dd_add(DD{kTwoPiHi, kTwoPiLo}, DD{-y.hi, -y.lo});
  return t.hi + t.lo;
}

} // namespace

float fabs_scalar(float x) {
  using FT = FloatTraits<float>;
  return FT::from_bits(FT::to_bits(x) & ~FT::sign_mask);
}
double fabs_scalar(double x) {
  using FT = FloatTraits<double>;
  return FT::from_bits(FT::to_bits(x) & ~FT::sign_mask);
}
bool signbit_scalar(float x) {
  using FT = FloatTraits<float>;
  return (FT::to_bits(x) & FT::sign_mask) != 0;
}
bool signbit_scalar(double x) {
  using FT = FloatTraits<double>;
  return (FT::to_bits(x) & FT::sign_mask) != 0;
}
bool isnan_scalar(float x) {
  using FT = FloatTraits<float>;
  uint32_t b = FT::to_bits(x);
  return (b & FT::exponent_mask) == FT::exponent_mask &&
         (b & FT::mantissa_mask) != 0;
}
bool isnan_scalar(double x) {
  using FT = FloatTraits<double>;
  uint64_t b = FT::to_bits(x);
  return (b & FT::exponent_mask) == FT::exponent_mask &&
         (b & FT::mantissa_mask) != 0;
}

//===----------------------------------------------------------------------===//
// sqrt
//===----------------------------------------------------------------------===//

namespace {

template <class T, int Iters> T sqrt_newton(T x, std::vector<T> *trace) {
  using FT = FloatTraits<T>;
  using U = typename FT::uint_t;
  if (isnan_scalar(x))
    return x;
  if (x == T(0))
    return x; // preserves -0
  if (x < T(0))
    return std::numeric_limits<T>::quiet_NaN();
  if (x == std::numeric_limits<T>::infinity())
    return x;

  // denormals: prescale by an even power so the exponent trick works
  T scale = T(1);
  if (x < std::numeric_limits<T>::min()) {
    constexpr int kShift = FT::mantissa_bits + (FT::mantissa_bits & 1);
    x = x * T(std::ldexp(1.0, kShift));
    scale = T(std::ldexp(1.0, -kShift / 2));
  }

  // initial guess: halve the exponent with an integer shift
  U b = FT::to_bits(x);
  U g = (b >> 1) + (U(FT::bias - 1) << (FT::mantissa_bits - 1)) +
        (U(1) << (FT::mantissa_bits - 1));
  T r = FT::from_bits(g);
  if (trace)
    trace->push_back(r * scale);
  for (int i = 0; i < Iters; ++i) {
    r = (r + x / r) * T(0.5);
    if (trace)
      trace->push_back(r * scale);
  }
  return r * scale;
}

} // namespace

float sqrt_scalar(float x) { return sqrt_newton<float, 3>(x, nullptr); }
double sqrt_scalar(double x) { return sqrt_newton<double, 4>(x, nullptr); }

std::vector<float> sqrt_newton_iterates(float x) {
  std::vector<float> t;
  sqrt_newton<float, 3>(x, &t);
  return t;
}
std::vector<double> sqrt_newton_iterates(double x) {
  std::vector<double> t;
  sqrt_newton<double, 4>(x, &t);
  return t;
}

//===----------------------------------------------------------------------===//
// sin
//===----------------------------------------------------------------------===//

float sin_scalar(float x) {
  if (isnan_scalar(x))
    return x;
  if (x == std::numeric_limits<float>::infinity() ||
      x == -std::numeric_limits<float>::infinity())
    return std::numeric_limits<float>::quiet_NaN();
  float ax = fabs_scalar(x);
  if (ax < 0x1p-13f)
    return x; // sin(x) = x to within half an ulp; keeps the sign of -0
  DD y = reduce_two_pi(double(ax));
  int sign;
  float t = float(folded_sin_arg(y, sign));
  // split evaluation keeps the exact leading t: sin = t + t*u*Q(u)
  float u = t * t;
  float w = kSinF32[4];
  w = w * u + kSinF32[3];
  w = w * u + kSinF32[2];
  w = w * u + kSinF32[1];
  float r = t + t * (u * w);
  if (sign < 0)
    r = -r;
  return signbit_scalar(x) ? -r : r;
}

double sin_scalar(double x) {
  if (isnan_scalar(x))
    return x;
  if (x == std::numeric_limits<double>::infinity() ||
      x == -std::numeric_limits<double>::infinity())
    return std::numeric_limits<double>::quiet_NaN();
  double ax = fabs_scalar(x);
  if (ax < 0x1p-26)
    return x;
  DD y = reduce_two_pi(ax);
  int sign;
  double t = folded_sin_arg(y, sign);
  // split evaluation keeps the exact leading t: the c0 defect is 1 - 2^-53
  double u = t * t;
  double w = kSinF64[7];
  for (int i = 6; i >= 1; --i)
    w = w * u + kSinF64[i];
  double r = t + t * (u * w + (kSinF64[0] - 1.0));
  if (sign < 0)
    r = -r;
  return signbit_scalar(x) ? -r : r;
}

//===----------------------------------------------------------------------===//
// exp
//===----------------------------------------------------------------------===//

namespace {

template <class T> T scale_pow2(T v, int k) {
  // 2^k via exponent arithmetic, in two steps around the normal range
  using FT = FloatTraits<T>;
  using U = typename FT::uint_t;
  auto make = [](int e) {
    return FT::from_bits(U(e + FT::bias) << FT::mantissa_bits);
  };
  int lo = -FT::bias + 1, hi = FT::bias;
  if (k > hi)
    return v * make(hi) * make(k - hi > hi ? hi : k - hi);
  if (k < lo)
    return v * make(lo) * make(k - lo < lo ? lo : k - lo);
  return v * make(k);
}

} // namespace

float exp_scalar(float x) {
  if (isnan_scalar(x))
    return x;
  if (x > 89.0f)
    return std::numeric_limits<float>::infinity();
  if (x < -104.0f)
    return 0.0f;
  double k = std::nearbyint(double(x) * kInvLn2);
  float r = float((double(x) - k * kLn2Hi) - k * kLn2Lo);
  float p = kExpF32[6];
  for (int i = 5; i >= 0; --i)
    p = p * r + kExpF32[i];
  return scale_pow2(p, int(k));
}

double exp_scalar(double x) {
  if (isnan_scalar(x))
    return x;
  if (x > 710.0)
    return std::numeric_limits<double>::infinity();
  if (x < -746.0)
    return 0.0;
  double k = std::nearbyint(x * kInvLn2);
  double r = (x - k * kLn2Hi) - k * kLn2Lo;
  double p = kExpF64[11];
  for (int i = 10; i >= 0; --i)
    p = p * r + kExpF64[i];
  return scale_pow2(p, int(k));
}

//===----------------------------------------------------------------------===//
// ulp measurement against an extended-precision reference
//===----------------------------------------------------------------------===//

namespace {

template <class T> double ulp_error(T computed, long double reference) {
  if (std::isnan((double)computed) && std::isnan((double)reference))
    return 0;
  T rounded = T(reference);
  if (std::isinf(rounded))
    return computed == rounded ? 0 : std::numeric_limits<double>::infinity();
  if (std::isinf((double)computed))
    return std::numeric_limits<double>::infinity();
  // ulp of the reference magnitude in T precision, with the denormal floor
  int exp;
  std::frexp((double)reference, &exp);
  int ulp_exp = exp - std::numeric_limits<T>::digits;
  int min_exp = std::numeric_limits<T>::min_exponent -
                std::numeric_limits<T>::digits;
  if (reference == 0 || ulp_exp < min_exp)
    ulp_exp = min_exp;
  long double ulp = ldexpl(1.0l, ulp_exp);
  return double(fabsl((long double)computed - reference) / ulp);
}

} // namespace

double ulp_error_f32(float computed, long double reference) {
  return ulp_error<float>(computed, reference);
}
double ulp_error_f64(double computed, long double reference) {
  return ulp_error<double>(computed, reference);
}

} // namespace wgkit::vecmath
