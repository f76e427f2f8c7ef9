#pragma once

#include <algorithm>
#include <cmath>

namespace intentrec {

/// Branch-stable logistic; both the tape kernels and the pure forwards use
/// this so the two evaluation routes agree bitwise.
inline double sigmoid_scalar(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// log(1 + e^t) = max(t, 0) + log1p(e^-|t|); finite for all t.
inline double stable_softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

/// v - softplus(v - hi) + softplus(lo - v). The exact value lies strictly in
/// (lo, hi); where rounding lands on a bound the result is nudged one ulp
/// back inside, so callers can rely on the open interval.
inline double soft_clip_scalar(double v, double lo, double hi) {
  double out = (v - stable_softplus(v - hi)) + stable_softplus(lo - v);
  if (out >= hi) out = std::nextafter(hi, lo);
  if (out <= lo) out = std::nextafter(lo, hi);
  return out;
}

/// Derivative of soft_clip_scalar in v: 1 - sigmoid(v - hi) - sigmoid(lo - v).
inline double soft_clip_derivative(double v, double lo, double hi) {
  return 1.0 - sigmoid_scalar(v - hi) - sigmoid_scalar(lo - v);
}

}  // namespace intentrec
