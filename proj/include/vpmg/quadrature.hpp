#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "vpmg/common.hpp"

namespace vpmg {

/// Quadrature rule on the reference interval [0,1]. Points are strictly
/// increasing, weights positive and summing to the interval length 1.
struct Quadrature1D {
  std::vector<double> points;
  std::vector<double> weights;

  int size() const { return static_cast<int>(points.size()); }
};

namespace detail {

// Legendre polynomial P_n and P_{n-1} at t via the three-term recurrence.
inline void legendre_pair(int n, double t, double& pn, double& pnm1) {
  double p0 = 1.0;
  double p1 = t;
  if (n == 0) {
    pn = p0;
    pnm1 = 0.0;
    return;
  }
  for (int j = 2; j <= n; ++j) {
    const double p2 = ((2 * j - 1) * t * p1 - (j - 1) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  pn = p1;
  pnm1 = p0;
}

} // namespace detail

/// Gauss-Legendre rule with n points on [0,1], exact for polynomials of
/// degree 2n-1. Nodes are computed by Newton iteration on P_n and
/// symmetrized about 0.5 so mirror pairs match bitwise.
inline Quadrature1D gauss_quadrature(int n) {
  if (n < 1)
    throw std::invalid_argument("gauss_quadrature: point count must be positive");

  constexpr double pi = 3.14159265358979323846;
  Quadrature1D rule;
  rule.points.resize(n);
  rule.weights.resize(n);

  const int half = (n + 1) / 2;
  for (int k = 0; k < half; ++k) {
    // k-th largest root of P_n on [-1,1].
    double t = std::cos(pi * (k + 0.75) / (n + 0.5));
    double pn = 0.0, pnm1 = 0.0;
    if (n % 2 == 1 && k == half - 1) {
      t = 0.0; // middle root is exact for odd n
      detail::legendre_pair(n, t, pn, pnm1);
    } else {
      for (int it = 0; it < 100; ++it) {
        detail::legendre_pair(n, t, pn, pnm1);
        const double dp = n * (t * pn - pnm1) / (t * t - 1.0);
        const double dt = pn / dp;
        t -= dt;
        if (std::abs(dt) < 1e-15)
          break;
      }
      detail::legendre_pair(n, t, pn, pnm1);
    }
    const double dp = (t * t == 1.0) ? 0.0 : n * (t * pn - pnm1) / (t * t - 1.0);
    const double w = 2.0 / ((1.0 - t * t) * dp * dp);

    // map to [0,1]; place the mirror image explicitly
    rule.points[n - 1 - k] = 0.5 + 0.5 * t;
    rule.points[k] = 0.5 - 0.5 * t;
    rule.weights[n - 1 - k] = 0.5 * w;
    rule.weights[k] = 0.5 * w;
  }
  return rule;
}

/// Gauss-Lobatto support points for a degree-p Lagrange basis on [0,1]:
/// both endpoints plus the p-1 extrema of the Legendre polynomial P_p.
inline std::vector<double> gauss_lobatto_points(int degree) {
  check_degree(degree);
  const int p = degree;
  std::vector<double> pts(p + 1);
  pts.front() = 0.0;
  pts.back() = 1.0;

  constexpr double pi = 3.14159265358979323846;
  const int n_interior = p - 1;
  for (int k = 0; k < (n_interior + 1) / 2; ++k) {
    // k-th largest interior node, a root of P_p'.
    double t = std::cos(pi * (k + 1) / p);
    if (n_interior % 2 == 1 && k == (n_interior - 1) / 2) {
      t = 0.0; // P_p' is odd for even p
    } else {
      for (int it = 0; it < 100; ++it) {
        double pn = 0.0, pnm1 = 0.0;
        detail::legendre_pair(p, t, pn, pnm1);
        const double d1 = p * (t * pn - pnm1) / (t * t - 1.0);
        const double d2 = (2.0 * t * d1 - p * (p + 1) * pn) / (1.0 - t * t);
        const double dt = d1 / d2;
        t -= dt;
        if (std::abs(dt) < 1e-15)
          break;
      }
    }
    pts[p - 1 - k] = 0.5 + 0.5 * t;
    pts[1 + k] = 0.5 - 0.5 * t;
  }
  return pts;
}

} // namespace vpmg
