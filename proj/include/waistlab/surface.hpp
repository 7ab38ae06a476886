#pragma once

// Model annuli of revolution r(z) = a + b |z|^(2+k) with a flat waist at z = 0.
//
// Coordinates are (z, theta): z is the axial height, theta the rotation angle.
// The first fundamental form is ds^2 = E dz^2 + G dtheta^2 with
// E = 1 + r'(z)^2 and G = r(z)^2. All derivatives of r are closed form.

#include "waistlab/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace waistlab {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Derivatives of the profile radius at one height.
struct RadiusJet {
  double r = 0.0;
  double r1 = 0.0; ///< r'
  double r2 = 0.0; ///< r''
  double r3 = 0.0; ///< r'''
};

/// Surface of revolution generated by r(z) = a + b |z|^(2+k) on |z| <= z_max.
struct RevolutionProfile {
  double a = 1.0;
  double b = 1.0;
  double k = 2.0;
  double z_max = 1.0;

  /// |z|^p with an exact multiplication path for small integer p.
  static double abs_pow(double z, double p) {
    const double x = std::abs(z);
    if (p == 0.0)
      return 1.0;
    const double n = std::round(p);
    if (n == p && n > 0.0 && n <= 16.0) {
      double out = x;
      for (int i = 1; i < static_cast<int>(n); ++i)
        out *= x;
      return out;
    }
    return std::pow(x, p);
  }

  double order() const { return 2.0 + k; }

  // Unchecked evaluations. These extend analytically past z_max, which the
  // weak-KAM ghost rows rely on.
  double r(double z) const { return a + b * abs_pow(z, 2.0 + k); }

  RadiusJet jet(double z) const {
    const double s = z < 0.0 ? -1.0 : 1.0;
    const double n = 2.0 + k;
    RadiusJet j;
    const double zk = abs_pow(z, k);
    const double ax = std::abs(z);
    j.r = a + b * zk * ax * ax;
    j.r1 = s * b * n * zk * ax;
    j.r2 = b * n * (1.0 + k) * zk;
    if (k == 0.0)
      j.r3 = 0.0;
    else if (ax == 0.0)
      j.r3 = (k == 1.0) ? s * b * n * (1.0 + k) : 0.0;
    else
      j.r3 = s * b * n * (1.0 + k) * k * zk / ax;
    return j;
  }

  double E(double z) const {
    const double d = jet(z).r1;
    return 1.0 + d * d;
  }

  double curvature(double z) const {
    const RadiusJet j = jet(z);
    const double e = 1.0 + j.r1 * j.r1;
    return -j.r2 / (j.r * e * e);
  }

  double area(double z) const {
    const RadiusJet j = jet(z);
    return j.r * std::sqrt(1.0 + j.r1 * j.r1);
  }

  double waist_length() const { return kTwoPi * a; }

  bool contains(double z) const { return std::abs(z) <= z_max * (1.0 + 1e-14); }
};

/// Throws ValidationError unless the profile satisfies its invariants.
/// Odd or fractional k > 0 is accepted only when allow_noneven_k is set.
inline void validate(const RevolutionProfile& p, bool allow_noneven_k = false) {
  if (!(p.a > 0.0) || !std::isfinite(p.a))
    throw ValidationError("profile: a must be > 0");
  if (!(p.b > 0.0) || !std::isfinite(p.b))
    throw ValidationError("profile: b must be > 0");
  if (!(p.z_max > 0.0) || !std::isfinite(p.z_max))
    throw ValidationError("profile: z_max must be > 0");
  if (!(p.k >= 0.0) || !std::isfinite(p.k))
    throw ValidationError("profile: k must be >= 0");
  const bool even = std::round(p.k) == p.k && std::fmod(p.k, 2.0) == 0.0;
  if (!even && !allow_noneven_k)
    throw ValidationError("profile: k must be even");
  if (!even && !(p.k > 0.0))
    throw ValidationError("profile: k must be > 0 when not even");
}

inline void require_in_domain(const RevolutionProfile& p, double z, const char* what) {
  if (!p.contains(z) || !std::isfinite(z))
    throw DomainError(std::string(what) + ": z=" + num(z) + " outside [-z_max, z_max]");
}

inline double radius(const RevolutionProfile& p, double z) {
  require_in_domain(p, z, "radius");
  return p.r(z);
}

struct MetricCoefficients {
  double E = 1.0; ///< dz^2 coefficient
  double G = 1.0; ///< dtheta^2 coefficient
};

inline MetricCoefficients metric_coefficients(const RevolutionProfile& p, double z) {
  require_in_domain(p, z, "metric_coefficients");
  const RadiusJet j = p.jet(z);
  return {1.0 + j.r1 * j.r1, j.r * j.r};
}

/// K(z) = -r'' / (r (1 + r'^2)^2).
inline double gaussian_curvature(const RevolutionProfile& p, double z) {
  require_in_domain(p, z, "gaussian_curvature");
  return p.curvature(z);
}

/// sqrt(E G) = r sqrt(1 + r'^2), per unit dtheta dz.
inline double area_element(const RevolutionProfile& p, double z) {
  require_in_domain(p, z, "area_element");
  return p.area(z);
}

/// Point on the annulus. theta is reduced to [0, 2 pi).
struct SurfacePoint {
  double z = 0.0;
  double theta = 0.0;

  static SurfacePoint make(double z, double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0.0)
      t += kTwoPi;
    if (t >= kTwoPi)
      t = 0.0;
    return {z, t};
  }
};

/// Point on the universal cover: theta is not reduced.
struct LiftedPoint {
  double z = 0.0;
  double theta_lift = 0.0;

  SurfacePoint reduced() const { return SurfacePoint::make(z, theta_lift); }
};

} // namespace waistlab
