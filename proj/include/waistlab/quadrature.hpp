#pragma once

// Adaptive Simpson quadrature with Richardson extrapolation. Each panel is
// compared against its two halves; the difference divided by 15 is the
// error estimate and is added back as the Richardson correction.

#include "waistlab/errors.hpp"

#include <cmath>

namespace waistlab::quad {

namespace detail {

template <class F>
double simpson_step(F& f, double a, double fa, double b, double fb, double m, double fm,
                    double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

} // namespace detail

/// Integral of f over [a, b] to absolute tolerance abs_tol.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double abs_tol = 1e-10, int max_depth = 48) {
  if (a == b)
    return 0.0;
  if (b < a)
    return -adaptive_simpson(f, b, a, abs_tol, max_depth);
  // Start from a few panels so that integrands vanishing to high order at one
  // end are not mistaken for converged on the first comparison.
  constexpr int panels = 8;
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * h;
    const double hi = (i + 1 == panels) ? b : lo + h;
    const double mid = 0.5 * (lo + hi);
    const double flo = f(lo);
    const double fhi = f(hi);
    const double fm = f(mid);
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
    total += detail::simpson_step(f, lo, flo, hi, fhi, mid, fm, whole, abs_tol / panels, max_depth);
  }
  return total;
}

/// Composite Gauss-Legendre (8 points per panel); used where an independent
/// fixed-rule check against the adaptive integrator is wanted.
template <class F>
double gauss_legendre(F&& f, double a, double b, int panels) {
  static constexpr double x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                  0.9602898564975363};
  static constexpr double w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                  0.1012285362903763};
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * h;
    const double r = 0.5 * h;
    double s = 0.0;
    for (int i = 0; i < 4; ++i)
      s += w[i] * (f(c - r * x[i]) + f(c + r * x[i]));
    total += r * s;
  }
  return total;
}

} // namespace waistlab::quad
