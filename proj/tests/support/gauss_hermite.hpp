#pragma once

// Test-only quadrature oracle, independent of the library under test.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace testsupport {

namespace detail {

/// Orthonormal Hermite polynomial values (p_n, p_{n-1}) at z.
inline std::pair<double, double> hermite_pair(int n, double z) {
  const double pim4 = 0.7511255444649425;  // pi^{-1/4}
  double p1 = pim4, p2 = 0.0;
  for (int j = 1; j <= n; ++j) {
    const double p3 = p2;
    p2 = p1;
    p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
  }
  return {p1, p2};
}

}  // namespace detail

/// Nodes and weights for Gauss-Hermite quadrature:
///   integral e^{-t^2} f(t) dt ~= sum_i w[i] f(t[i]).
/// Positive roots are bracketed by a sign-change scan of the orthonormal
/// Hermite recurrence and polished by bisection; this stays robust for the
/// few-hundred-node range where Newton from asymptotic guesses can jump
/// between neighboring roots.
inline void gauss_hermite(int n, std::vector<double>& x, std::vector<double>& w) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
  x.assign(n, 0.0);
  w.assign(n, 0.0);

  auto value = [n](double z) { return detail::hermite_pair(n, z).first; };

  std::vector<double> roots;  // positive roots, ascending
  const double upper = std::sqrt(2.0 * n + 1.0) + 1.0;
  // Root spacing near the center is ~pi/sqrt(2n); scan at an eighth of that.
  const double step = 3.141592653589793 / std::sqrt(2.0 * n) / 8.0;
  double lo = (n % 2 == 1) ? step / 2.0 : 0.0;  // odd n has a root at exactly 0
  if (n % 2 == 1) roots.push_back(0.0);
  double flo = value(lo);
  for (double hi = lo + step; lo < upper; lo = hi, hi += step) {
    double fhi = value(hi);
    if (flo == 0.0) {
      flo = fhi;
      continue;  // the bracket start itself was a root, already recorded
    }
    if ((flo < 0.0) != (fhi < 0.0) || fhi == 0.0) {
      double a = lo, b = hi, fa = flo;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid == a || mid == b) break;
        const double fm = value(mid);
        if (fm == 0.0) {
          a = b = mid;
          break;
        }
        if ((fa < 0.0) != (fm < 0.0)) {
          b = mid;
        } else {
          a = mid;
          fa = fm;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    flo = fhi;
  }

  const std::size_t m = (n + 1) / 2;
  if (roots.size() != m) {
    throw std::runtime_error("gauss_hermite: expected " + std::to_string(m) + " roots, found " +
                             std::to_string(roots.size()));
  }

  // Descending positive roots in the first half, mirrored in the second.
  for (std::size_t i = 0; i < m; ++i) {
    const double z = roots[m - 1 - i];
    const double pnm1 = detail::hermite_pair(n, z).second;
    const double pp = std::sqrt(2.0 * n) * pnm1;
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
}

/// log sum_i exp(v_i), max-shifted.
inline double log_sum_exp(const std::vector<double>& v) {
  double mx = v[0];
  for (double a : v) mx = std::max(mx, a);
  double s = 0.0;
  for (double a : v) s += std::exp(a - mx);
  return mx + std::log(s);
}

}  // namespace testsupport
