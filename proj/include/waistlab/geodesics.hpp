#pragma once

// Unit-speed geodesics on a surface of revolution in (z, theta, psi) form,
// psi being the angle between the velocity and the parallel circle:
//
//   dz/ds     = sin(psi) / sqrt(E)
//   dtheta/ds = cos(psi) / r
//   dpsi/ds   = r' cos(psi) / (r sqrt(E))
//
// The psi equation is the derivative of the Clairaut relation r cos(psi) = c,
// so the invariant is not built in and its drift measures integration error.
// The right-hand side is smooth through turning points (psi = +-pi/2 mod pi
// only when c = 0), so no local reparametrization is needed there.

#include "waistlab/quadrature.hpp"
#include "waistlab/surface.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace waistlab {

struct GeodesicState {
  LiftedPoint point;
  double psi = 0.0;
  double speed = 1.0; ///< always 1; kept for interface symmetry
};

struct GeodesicSample {
  double s = 0.0;
  double z = 0.0;
  double theta_lift = 0.0;
  double psi = 0.0;
  double clairaut_drift = 0.0;
};

struct GeodesicPath {
  std::vector<GeodesicSample> samples;
  double total_length = 0.0;
  double max_drift = 0.0;
  double max_speed_defect = 0.0;
  bool clipped = false; ///< path reached |z| = z_max and was truncated there
};

inline double clairaut_constant(const RevolutionProfile& p, const GeodesicState& st) {
  return p.r(st.point.z) * std::cos(st.psi);
}

/// Angle with the parallel of the geodesic through height z that is asymptotic
/// to the waist, i.e. the one with Clairaut constant a.
inline double asymptote_angle(const RevolutionProfile& p, double z) {
  require_in_domain(p, z, "asymptote_angle");
  const double rm = p.b * RevolutionProfile::abs_pow(z, p.order()); // r - a, no cancellation
  return std::atan2(std::sqrt(rm * (rm + 2.0 * p.a)), p.a);
}

namespace geo_detail {

using Vec3 = std::array<double, 3>; // z, theta, psi

inline Vec3 rhs(const RevolutionProfile& p, const Vec3& y) {
  const RadiusJet j = p.jet(y[0]);
  const double sq = std::sqrt(1.0 + j.r1 * j.r1);
  const double c = std::cos(y[2]);
  return {std::sin(y[2]) / sq, c / j.r, j.r1 * c / (j.r * sq)};
}

inline Vec3 rk4(const RevolutionProfile& p, const Vec3& y, double h) {
  auto axpy = [](const Vec3& a, double t, const Vec3& d) {
    return Vec3{a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]};
  };
  const Vec3 k1 = rhs(p, y);
  const Vec3 k2 = rhs(p, axpy(y, 0.5 * h, k1));
  const Vec3 k3 = rhs(p, axpy(y, 0.5 * h, k2));
  const Vec3 k4 = rhs(p, axpy(y, h, k3));
  Vec3 out;
  for (int i = 0; i < 3; ++i)
    out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

inline double speed_defect(const RevolutionProfile& p, const Vec3& y, const Vec3& dy) {
  const RadiusJet j = p.jet(y[0]);
  return std::abs((1.0 + j.r1 * j.r1) * dy[0] * dy[0] + j.r * j.r * dy[1] * dy[1] - 1.0);
}

/// Largest h' in [0, h] with g(rk4(y, h')) <= 0, given g(y) <= 0 < g(rk4(y, h)).
template <class G>
double locate_event(const RevolutionProfile& p, const Vec3& y, double h, G&& g) {
  double lo = 0.0, hi = h;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, h); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(rk4(p, y, mid)) > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace geo_detail

/// Integrates from `state` for arc length `horizon` with RK4 at the given step.
/// The path is truncated (and flagged) where it reaches |z| = z_max.
/// Throws StepTooLarge if the Clairaut drift exceeds 1e-6 * horizon.
inline GeodesicPath integrate_geodesic(const RevolutionProfile& p, const GeodesicState& state,
                                       double horizon, double step, bool record = true) {
  if (!(step > 0.0) || !(horizon > 0.0))
    throw DomainError("integrate_geodesic: step and horizon must be positive");
  require_in_domain(p, state.point.z, "integrate_geodesic");
  using geo_detail::Vec3;
  const auto n = static_cast<long>(std::ceil(horizon / step - 1e-9));
  const double h = horizon / static_cast<double>(n);
  const double c0 = clairaut_constant(p, state);

  GeodesicPath path;
  if (record)
    path.samples.reserve(static_cast<std::size_t>(n) + 1);
  Vec3 y{state.point.z, state.point.theta_lift, state.psi};
  double s = 0.0;
  auto push = [&](const Vec3& v, double at) {
    const double drift = std::abs(p.r(v[0]) * std::cos(v[2]) - c0);
    path.max_drift = std::max(path.max_drift, drift);
    path.max_speed_defect = std::max(path.max_speed_defect, geo_detail::speed_defect(p, v, geo_detail::rhs(p, v)));
    if (record)
      path.samples.push_back({at, v[0], v[1], v[2], drift});
  };
  push(y, 0.0);
  for (long i = 0; i < n; ++i) {
    Vec3 next = geo_detail::rk4(p, y, h);
    if (std::abs(next[0]) > p.z_max) {
      const double hz = geo_detail::locate_event(p, y, h, [&](const Vec3& v) { return std::abs(v[0]) - p.z_max; });
      next = geo_detail::rk4(p, y, hz);
      next[0] = std::clamp(next[0], -p.z_max, p.z_max);
      s += hz;
      push(next, s);
      path.clipped = true;
      break;
    }
    y = next;
    s = (i + 1 == n) ? horizon : s + h;
    push(y, s);
  }
  path.total_length = s;
  if (path.max_drift > 1e-6 * horizon)
    throw StepTooLarge("integrate_geodesic: Clairaut drift " + num(path.max_drift) +
                       " exceeds 1e-6 * horizon");
  return path;
}

/// Connecting geodesic found by shooting. Angles are measured in the
/// orthonormal frame (parallel, meridian) at each end, as the direction of travel.
struct GeodesicSolution {
  double length = 0.0;
  double psi_start = 0.0; ///< direction leaving p
  double psi_end = 0.0;   ///< direction arriving at q
  int shots = 0;
};

struct ShootingOptions {
  double step = 2e-3;      ///< RK4 arc-length step
  int scan_points = 64;    ///< initial angle grid over (-pi/2, pi/2)
  double angle_tol = 1e-12;
  long max_steps = 50'000'000;
};

namespace geo_detail {

struct Shot {
  double residual = 0.0; ///< z(theta_q) - z_q, or +-inf on exit through the top/bottom
  double length = 0.0;
  double psi_end = 0.0;
};

// Shoots from (zp, 0) with angle psi in (-pi/2, pi/2) until theta reaches dtheta > 0.
inline Shot shoot(const RevolutionProfile& p, double zp, double dtheta, double zq, double psi,
                  const ShootingOptions& opt) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Vec3 y{zp, 0.0, psi};
  double s = 0.0;
  const double h = opt.step;
  for (long i = 0; i < opt.max_steps; ++i) {
    const Vec3 next = rk4(p, y, h);
    if (next[1] >= dtheta) {
      const double he = locate_event(p, y, h, [&](const Vec3& v) { return v[1] - dtheta; });
      const Vec3 at = rk4(p, y, he);
      if (std::abs(at[0]) <= p.z_max)
        return {at[0] - zq, s + he, at[2]};
    }
    if (std::abs(next[0]) > p.z_max)
      return {next[0] > 0.0 ? inf : -inf, s, next[2]};
    y = next;
    s += h;
  }
  throw NoConvergence("distance: shot did not reach the target angle");
}

inline double meridian_length(const RevolutionProfile& p, double z0, double z1) {
  return std::abs(quad::adaptive_simpson([&](double t) { return std::sqrt(p.E(t)); }, std::min(z0, z1),
                                         std::max(z0, z1), 1e-13));
}

} // namespace geo_detail

/// Geodesic between p and q on the universal cover (theta lifts are taken
/// literally). Throws NoConvergence when no bracket is found.
inline GeodesicSolution solve_geodesic(const RevolutionProfile& prof, const LiftedPoint& p, const LiftedPoint& q,
                                       const ShootingOptions& opt = {}) {
  require_in_domain(prof, p.z, "distance");
  require_in_domain(prof, q.z, "distance");
  constexpr double half_pi = std::numbers::pi / 2.0;
  const double dtheta_signed = q.theta_lift - p.theta_lift;
  const double dtheta = std::abs(dtheta_signed);
  GeodesicSolution sol;

  if (dtheta == 0.0) {
    sol.length = geo_detail::meridian_length(prof, p.z, q.z);
    sol.psi_start = sol.psi_end = (q.z >= p.z) ? half_pi : -half_pi;
    return sol;
  }
  // Mirror theta -> -theta so the shot always travels in +theta.
  auto unmirror = [&](double psi) { return dtheta_signed > 0.0 ? psi : std::numbers::pi - psi; };
  if (p.z == 0.0 && q.z == 0.0) {
    sol.length = prof.a * dtheta;
    sol.psi_start = sol.psi_end = unmirror(0.0);
    return sol;
  }

  const int m = std::max(4, opt.scan_points);
  auto angle = [&](int i) { return -half_pi + (i + 0.5) * (std::numbers::pi / m); };
  double lo = -half_pi, hi = half_pi;
  std::optional<geo_detail::Shot> exact;
  double exact_psi = 0.0;
  double prev_psi = -half_pi; // virtual endpoint: residual -inf
  bool bracketed = false;
  for (int i = 0; i < m; ++i) {
    const double psi = angle(i);
    const auto shot = geo_detail::shoot(prof, p.z, dtheta, q.z, psi, opt);
    ++sol.shots;
    if (shot.residual == 0.0) {
      exact = shot;
      exact_psi = psi;
      break;
    }
    if (shot.residual > 0.0) {
      lo = prev_psi;
      hi = psi;
      bracketed = true;
      break;
    }
    prev_psi = psi;
  }
  if (!exact && !bracketed) {
    lo = prev_psi; // positive virtual endpoint at +pi/2
    hi = half_pi;
  }

  geo_detail::Shot best{};
  double best_psi = 0.0;
  if (exact) {
    best = *exact;
    best_psi = exact_psi;
  } else {
    bool have = false;
    for (int it = 0; it < 200 && hi - lo > opt.angle_tol; ++it) {
      const double mid = 0.5 * (lo + hi);
      const auto shot = geo_detail::shoot(prof, p.z, dtheta, q.z, mid, opt);
      ++sol.shots;
      if (std::isfinite(shot.residual)) {
        best = shot;
        best_psi = mid;
        have = true;
      }
      if (shot.residual == 0.0)
        break;
      (shot.residual > 0.0 ? hi : lo) = mid;
    }
    if (!have || std::abs(best.residual) > 1e-6 * std::max(1.0, prof.z_max)) {
      // Re-evaluate at the converged angle; the residual must be small there.
      const double mid = 0.5 * (lo + hi);
      const auto shot = geo_detail::shoot(prof, p.z, dtheta, q.z, mid, opt);
      ++sol.shots;
      if (!std::isfinite(shot.residual) || std::abs(shot.residual) > 1e-6)
        throw NoConvergence("distance: shooting residual not bracketed (z_max too small or endpoint clipped)");
      best = shot;
      best_psi = mid;
    }
  }
  sol.length = best.length;
  sol.psi_start = unmirror(best_psi);
  sol.psi_end = unmirror(best.psi_end);
  return sol;
}

inline double distance(const RevolutionProfile& prof, const LiftedPoint& p, const LiftedPoint& q,
                       const ShootingOptions& opt = {}) {
  return solve_geodesic(prof, p, q, opt).length;
}

/// Signed meridian arc length from the waist to height z (the Fermi normal
/// coordinate of the waist).
inline double meridian_arc(const RevolutionProfile& p, double z) {
  require_in_domain(p, z, "meridian_arc");
  const double s = geo_detail::meridian_length(p, 0.0, std::abs(z));
  return z < 0.0 ? -s : s;
}

/// Inverse of meridian_arc (Newton, safeguarded by bisection).
inline double height_at_arc(const RevolutionProfile& p, double s) {
  const double top = meridian_arc(p, p.z_max);
  if (!(std::abs(s) <= top))
    throw DomainError("height_at_arc: |s| = " + num(std::abs(s)) + " exceeds the meridian length " + num(top));
  const double target = std::abs(s);
  double lo = 0.0, hi = p.z_max, z = std::min(target, p.z_max); // arc >= height
  for (int it = 0; it < 100; ++it) {
    const double f = meridian_arc(p, z) - target;
    if (std::abs(f) <= 1e-15 * std::max(1.0, target))
      break;
    (f > 0.0 ? hi : lo) = z;
    double next = z - f / std::sqrt(p.E(z));
    if (!(next > lo && next < hi))
      next = 0.5 * (lo + hi);
    if (next == z)
      break;
    z = next;
  }
  return s < 0.0 ? -z : z;
}

} // namespace waistlab
