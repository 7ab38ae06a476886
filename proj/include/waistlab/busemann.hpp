#pragma once

// Busemann functions of the waist and the Peierls barrier they produce.
//
// For x at height z the two Busemann functions of the waist (one per
// orientation) sum to
//
//   B(z) = 2 int_0^z sin(psi(t)) sqrt(1 + r'(t)^2) dt,  cos(psi) = a / r,
//
// the sqrt(E) factor turning dz into meridian arc length. Near the waist the
// integrand is sqrt(2b/a) t^(1+k/2), hence B ~ C z^(2+k/2).

#include "waistlab/geodesics.hpp"
#include "waistlab/quadrature.hpp"
#include "waistlab/surface.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace waistlab {

/// Integrand of the Busemann sum at height t (including the factor 2).
inline double busemann_integrand(const RevolutionProfile& p, double t) {
  const RadiusJet j = p.jet(t);
  const double rm = p.b * RevolutionProfile::abs_pow(t, p.order());
  return 2.0 * std::sqrt(rm * (rm + 2.0 * p.a)) / j.r * std::sqrt(1.0 + j.r1 * j.r1);
}

/// B(z); even in z.
inline double busemann_sum_quadrature(const RevolutionProfile& p, double z, double abs_tol = 1e-10) {
  require_in_domain(p, z, "busemann_sum_quadrature");
  return quad::adaptive_simpson([&](double t) { return busemann_integrand(p, t); }, 0.0, std::abs(z), abs_tol);
}

/// h(x, x) for x at height z. Independent of theta by rotational symmetry.
inline double peierls_barrier_busemann(const RevolutionProfile& p, double z) {
  return busemann_sum_quadrature(p, z);
}

/// d(x, gamma(direction * horizon)) - horizon with gamma(t) the unit-speed waist
/// through the foot of x's meridian: gamma(t) = (0, theta_x + t / a).
inline double busemann_limit(const RevolutionProfile& p, const LiftedPoint& x, double horizon, int direction = +1,
                             const ShootingOptions& opt = {}) {
  if (horizon < 20.0)
    throw DomainError("busemann_limit: horizon must be >= 20");
  const LiftedPoint target{0.0, x.theta_lift + (direction >= 0 ? 1.0 : -1.0) * horizon / p.a};
  return distance(p, x, target, opt) - horizon;
}

/// Forward plus backward limit values; converges to B(z(x)).
inline double busemann_limit_sum(const RevolutionProfile& p, const LiftedPoint& x, double horizon,
                                 const ShootingOptions& opt = {}) {
  return busemann_limit(p, x, horizon, +1, opt) + busemann_limit(p, x, horizon, -1, opt);
}

struct LeadingTerm {
  double coefficient = 0.0;
  double power = 0.0;
};

/// C = 2 sqrt(2b/a) / (2 + k/2) and power 2 + k/2.
inline LeadingTerm leading_coefficient(const RevolutionProfile& p) {
  const double power = 2.0 + 0.5 * p.k;
  return {2.0 * std::sqrt(2.0 * p.b / p.a) / power, power};
}

enum class BarrierMethod { quadrature, limit, weakkam };

inline const char* to_string(BarrierMethod m) {
  switch (m) {
  case BarrierMethod::quadrature:
    return "quadrature";
  case BarrierMethod::limit:
    return "limit";
  case BarrierMethod::weakkam:
    return "weakkam";
  }
  return "?";
}

struct BarrierCurve {
  std::vector<double> z;
  std::vector<double> value;
  BarrierMethod method = BarrierMethod::quadrature;
  RevolutionProfile profile;
};

inline BarrierCurve sample_barrier_quadrature(const RevolutionProfile& p, const std::vector<double>& zs) {
  BarrierCurve c;
  c.profile = p;
  c.z = zs;
  c.value.reserve(zs.size());
  for (double z : zs)
    c.value.push_back(busemann_sum_quadrature(p, z));
  return c;
}

struct PowerFit {
  double power = 0.0;
  double coeff = 0.0;
  double r_squared = 0.0;
};

/// Least squares of ln(value) on ln(x). Throws DegenerateFit if r^2 < min_r2.
inline PowerFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y, double min_r2 = 0.99) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n)
    throw DegenerateFit("power fit: need at least two points");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw DegenerateFit("power fit: nonpositive sample");
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx, dy = std::log(y[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0)
    throw DegenerateFit("power fit: all abscissae equal");
  PowerFit f;
  f.power = sxy / sxx;
  f.coeff = std::exp(my - f.power * mx);
  f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  if (f.r_squared < min_r2)
    throw DegenerateFit("power fit: r^2 = " + num(f.r_squared) + " below " + num(min_r2));
  return f;
}

/// Fit over samples with z in [z_lo, z_hi]; at least 8 are required.
inline PowerFit fit_power_law(const BarrierCurve& curve, double z_lo, double z_hi) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < curve.z.size(); ++i) {
    if (curve.z[i] >= z_lo && curve.z[i] <= z_hi) {
      xs.push_back(curve.z[i]);
      ys.push_back(curve.value[i]);
    }
  }
  if (xs.size() < 8)
    throw DegenerateFit("fit_power_law: fewer than 8 samples in window");
  return fit_log_log(xs, ys);
}

} // namespace waistlab
