#pragma once

// Geodesic polygons, Gauss-Bonnet checks and the angle comparison between two
// curvature-ordered profiles.
//
// Both surfaces are parametrized by the Fermi coordinates of the waist: t is arc
// length along the waist (theta = t / a) and s signed arc length along the
// meridians. Comparison triangles have vertices c(0) = (0, 0), sigma_0(s) and
// c(t), t < 0. On the more curved surface (larger b) the angle at sigma_0(s) is
// no larger and the side sigma_0(s) -> c(t) lies inside the other triangle.
// Matching points by height z instead of by s breaks the containment for
// short, tall triangles, since equal z is not equal meridian distance.
//
// Curvature integrals use Green's theorem: K dA = -d_z(r' / sqrt E) dz dtheta,
// so over a region bounded counterclockwise in the (theta, z) plane
//
//   iint K dA = oint (r' / sqrt E) dtheta,
//
// and along a unit-speed geodesic dtheta = cos(psi) / r ds. Each side is
// resampled at equal arc-length steps and integrated with the trapezoid rule,
// which makes the Gauss-Bonnet residual O(h^2).

#include "waistlab/geodesics.hpp"
#include "waistlab/parallel.hpp"
#include "waistlab/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace waistlab {

/// 64-bit linear congruential generator (Knuth's MMIX constants). uniform()
/// takes the top 53 bits, so sequences are bit-exact in any language.
struct Lcg {
  std::uint64_t state = 0;

  explicit Lcg(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return state;
  }
  /// In [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

/// Angle in (-pi, pi].
inline double wrap_angle(double x) {
  x = std::remainder(x, kTwoPi);
  return x <= -std::numbers::pi ? x + kTwoPi : x;
}

struct PolygonOptions {
  ShootingOptions shooting{};
  int samples_per_side = 512; ///< boundary resampling for the curvature integral
};

/// Closed geodesic polygon; side i runs from vertex i to vertex i + 1 (mod n).
struct GeodesicPolygon {
  RevolutionProfile profile;
  std::vector<LiftedPoint> vertices;
  std::vector<GeodesicSolution> sides;
  std::vector<double> angles; ///< inner angle at each vertex
  int samples_per_side = 512;
  double integration_step = 2e-3;

  std::size_t size() const { return vertices.size(); }
  double angle_sum() const {
    double s = 0.0;
    for (double a : angles)
      s += a;
    return s;
  }
};

using GeodesicTriangle = GeodesicPolygon;

inline GeodesicPolygon build_polygon(const RevolutionProfile& p, const std::vector<LiftedPoint>& v,
                                     const PolygonOptions& opt = {}) {
  const std::size_t n = v.size();
  if (n < 3)
    throw DegenerateTriangle("build_polygon: need at least three vertices");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(v[i].z - v[j].z) + p.a * std::abs(v[i].theta_lift - v[j].theta_lift) < 1e-9)
        throw DegenerateTriangle("build_polygon: vertices " + std::to_string(i) + " and " + std::to_string(j) +
                                 " coincide");
  GeodesicPolygon poly;
  poly.profile = p;
  poly.vertices = v;
  poly.samples_per_side = opt.samples_per_side;
  poly.integration_step = opt.shooting.step;
  for (std::size_t i = 0; i < n; ++i)
    poly.sides.push_back(solve_geodesic(p, v[i], v[(i + 1) % n], opt.shooting));
  for (std::size_t i = 0; i < n; ++i) {
    const double out = poly.sides[i].psi_start;
    const double back = poly.sides[(i + n - 1) % n].psi_end + std::numbers::pi;
    poly.angles.push_back(std::abs(wrap_angle(out - back)));
  }
  for (std::size_t i = 0; i < n; ++i)
    if (poly.angles[i] < 1e-9 || poly.angles[i] > std::numbers::pi - 1e-9)
      throw DegenerateTriangle("build_polygon: collinear vertices (angle " + num(poly.angles[i]) + " at vertex " +
                               std::to_string(i) + ")");
  return poly;
}

inline GeodesicTriangle build_triangle(const RevolutionProfile& p, const LiftedPoint& v1, const LiftedPoint& v2,
                                       const LiftedPoint& v3, const PolygonOptions& opt = {}) {
  return build_polygon(p, {v1, v2, v3}, opt);
}

namespace cmp_detail {

struct Pt {
  double theta, z;
};

inline double cross(const Pt& o, const Pt& a, const Pt& b) {
  return (a.theta - o.theta) * (b.z - o.z) - (a.z - o.z) * (b.theta - o.theta);
}

// Proper crossing only; orientations within `eps` of zero count as touching,
// which keeps rounding noise on straight sides from registering.
inline bool segments_cross(const Pt& a, const Pt& b, const Pt& c, const Pt& d, double eps) {
  const double d1 = cross(c, d, a), d2 = cross(c, d, b);
  const double d3 = cross(a, b, c), d4 = cross(a, b, d);
  return ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps));
}

} // namespace cmp_detail

struct GaussBonnet {
  double angle_excess = 0.0;       ///< sum of angles - (n - 2) pi
  double curvature_integral = 0.0; ///< iint K dA over the enclosed region
  double residual = 0.0;
};

/// Angle excess against the enclosed curvature. Throws MeshFailure if the
/// resampled boundary does not close up or intersects itself.
inline GaussBonnet gauss_bonnet(const GeodesicPolygon& poly) {
  using cmp_detail::Pt;
  const RevolutionProfile& p = poly.profile;
  const std::size_t n = poly.size();
  const int m = std::max(2, poly.samples_per_side);
  std::vector<Pt> ring;
  double line = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const GeodesicSolution& side = poly.sides[i];
    const GeodesicState start{poly.vertices[i], side.psi_start, 1.0};
    // Integrate at the shooting step or finer; keep every q-th state.
    const double h = side.length / m;
    const int q = std::max(1, static_cast<int>(std::ceil(h / poly.integration_step)));
    const auto path = integrate_geodesic(p, start, side.length, h / q);
    const auto& smp = path.samples;
    if (path.clipped || smp.size() != static_cast<std::size_t>(m) * q + 1)
      throw MeshFailure("gauss_bonnet: side " + std::to_string(i) + " left the domain");
    const LiftedPoint& to = poly.vertices[(i + 1) % n];
    const double miss = std::abs(smp.back().z - to.z) + p.a * std::abs(smp.back().theta_lift - to.theta_lift);
    if (miss > 1e-6)
      throw MeshFailure("gauss_bonnet: side " + std::to_string(i) + " misses its end vertex by " + num(miss));
    for (int k = 0; k <= m; ++k) {
      const GeodesicSample& at = smp[static_cast<std::size_t>(k) * q];
      const RadiusJet j = p.jet(at.z);
      const double f = j.r1 / std::sqrt(1.0 + j.r1 * j.r1) * std::cos(at.psi) / j.r;
      line += (k == 0 || k == m ? 0.5 : 1.0) * h * f;
      if (k < m)
        ring.push_back({at.theta_lift, at.z});
    }
  }
  double twice_area = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Pt& a = ring[i];
    const Pt& b = ring[(i + 1) % ring.size()];
    twice_area += a.theta * b.z - b.theta * a.z;
  }
  if (twice_area == 0.0)
    throw MeshFailure("gauss_bonnet: boundary encloses no area");
  const std::size_t r = ring.size();
  double extent = 0.0;
  for (const Pt& q : ring)
    extent = std::max({extent, std::abs(q.theta - ring[0].theta), std::abs(q.z - ring[0].z)});
  const double eps = 1e-12 * extent * extent;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = i + 2; j < r; ++j) {
      if (i == 0 && j == r - 1)
        continue;
      if (cmp_detail::segments_cross(ring[i], ring[i + 1], ring[j], ring[(j + 1) % r], eps))
        throw MeshFailure("gauss_bonnet: boundary self-intersects (segments " + std::to_string(i) + ", " +
                          std::to_string(j) + " of " + std::to_string(r) + ")");
    }
  GaussBonnet gb;
  gb.curvature_integral = twice_area > 0.0 ? line : -line;
  gb.angle_excess = poly.angle_sum() - static_cast<double>(n - 2) * std::numbers::pi;
  gb.residual = std::abs(gb.angle_excess - gb.curvature_integral);
  return gb;
}

inline double gauss_bonnet_residual(const GeodesicPolygon& poly) { return gauss_bonnet(poly).residual; }

/// Triangle c(0), sigma_0(s), c(t) in the waist's Fermi coordinates: t is arc
/// length along the waist, s arc length along the meridian theta = 0.
inline GeodesicTriangle comparison_triangle(const RevolutionProfile& p, double s, double t,
                                            const PolygonOptions& opt = {}) {
  return build_triangle(p, {0.0, 0.0}, {height_at_arc(p, s), 0.0}, {0.0, t / p.a}, opt);
}

/// Box c(0), sigma_0(s), sigma_t(s), c(t) with sigma_t the meridian through c(t).
inline GeodesicPolygon comparison_box(const RevolutionProfile& p, double s, double t, const PolygonOptions& opt = {}) {
  const double z = height_at_arc(p, s);
  return build_polygon(p, {{0.0, 0.0}, {z, 0.0}, {z, t / p.a}, {0.0, t / p.a}}, opt);
}

/// Smallest signed margin (positive inside) of `samples` interior points of
/// side sigma_0(s) -> c(t) of `inner` against the three sides of `outer`, both
/// comparison triangles over the same Fermi vertices. Points are carried over
/// by their Fermi coordinates (t, s); margins are outer-metric distances:
/// s above the waist, r |t| / a past the meridian theta = 0, and the gap in s
/// below outer's side sigma_0(s) -> c(t) along the meridian.
inline double containment_margin(const GeodesicTriangle& outer, const GeodesicTriangle& inner, int samples = 50) {
  const RevolutionProfile& p = outer.profile;
  const double theta3 = outer.vertices[2].theta_lift;
  const double dir = theta3 < 0.0 ? -1.0 : 1.0;

  // Outer side as z(theta), cubic Hermite with dz/dtheta = tan(psi) r / sqrt(E).
  const GeodesicSolution& so = outer.sides[1];
  const auto fine = integrate_geodesic(p, {outer.vertices[1], so.psi_start, 1.0}, so.length,
                                       std::min(outer.integration_step, so.length / 4096.0));
  std::vector<double> th, zz, dz;
  for (const auto& smp : fine.samples) {
    const RadiusJet j = p.jet(smp.z);
    th.push_back(dir * smp.theta_lift); // ascending
    zz.push_back(smp.z);
    dz.push_back(dir * std::tan(smp.psi) * j.r / std::sqrt(1.0 + j.r1 * j.r1));
  }
  auto z_outer = [&](double x) {
    auto it = std::upper_bound(th.begin(), th.end(), x);
    std::size_t k = it == th.begin() ? 0 : static_cast<std::size_t>(it - th.begin()) - 1;
    k = std::min(k, th.size() - 2);
    const double h = th[k + 1] - th[k];
    const double u = (x - th[k]) / h;
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
    return h00 * zz[k] + h10 * h * dz[k] + h01 * zz[k + 1] + h11 * h * dz[k + 1];
  };

  const GeodesicSolution& si = inner.sides[1];
  const double step = si.length / (samples + 1);
  const int q = std::max(1, static_cast<int>(std::ceil(step / inner.integration_step)));
  const auto path =
      integrate_geodesic(inner.profile, {inner.vertices[1], si.psi_start, 1.0}, si.length, step / q);
  double margin = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= samples; ++k) {
    const auto& smp = path.samples.at(static_cast<std::size_t>(k) * q);
    const double s = meridian_arc(inner.profile, smp.z);
    const double x = dir * smp.theta_lift;
    margin = std::min(margin, s);
    margin = std::min(margin, x * p.r(height_at_arc(p, s)));
    margin = std::min(margin, meridian_arc(p, std::clamp(z_outer(x), -p.z_max, p.z_max)) - s);
  }
  return margin;
}

struct ComparisonTrial {
  int trial = 0;
  double s = 0.0; ///< meridian arc length of sigma_0(s)
  double t = 0.0; ///< waist arc length of c(t)
  double alpha1 = 0.0; ///< angle at sigma_0(s) on the less curved profile
  double alpha2 = 0.0;
  double margin = 0.0;             ///< alpha1 - alpha2
  double containment = 0.0;        ///< containment_margin(tri1, tri2)
  double gb_residual1 = 0.0;
  double gb_residual2 = 0.0;
  bool pass = false;
};

struct ComparisonOptions {
  PolygonOptions polygon{};
  double angle_slack = 1e-6;
  double containment_slack = 1e-6;
  int containment_samples = 50;
  double s_lo = 0.05, s_hi = 0.5; ///< Fermi s window
  double t_hi = -0.1;  ///< t drawn from [-8 z_max, t_hi]
  int jobs = 1;
  bool strict = false; ///< throw ComparisonViolation on the first failing trial
};

inline ComparisonTrial compare_triangles(const RevolutionProfile& p1, const RevolutionProfile& p2, double s, double t,
                                         const ComparisonOptions& opt = {}) {
  const auto tri1 = comparison_triangle(p1, s, t, opt.polygon);
  const auto tri2 = comparison_triangle(p2, s, t, opt.polygon);
  ComparisonTrial r;
  r.s = s;
  r.t = t;
  r.alpha1 = tri1.angles[1];
  r.alpha2 = tri2.angles[1];
  r.margin = r.alpha1 - r.alpha2;
  r.containment = containment_margin(tri1, tri2, opt.containment_samples);
  r.gb_residual1 = gauss_bonnet_residual(tri1);
  r.gb_residual2 = gauss_bonnet_residual(tri2);
  r.pass = r.margin >= -opt.angle_slack && r.containment >= -opt.containment_slack;
  return r;
}

/// Seeded trials over (s, t). Profiles must share a and k with b2 >= b1.
/// Vertex pairs are drawn sequentially from one generator, so results do not
/// depend on the number of workers.
inline std::vector<ComparisonTrial> angle_comparison_trial(const RevolutionProfile& p1, const RevolutionProfile& p2,
                                                           int trials, std::uint64_t seed,
                                                           const ComparisonOptions& opt = {}) {
  if (p1.a != p2.a || p1.k != p2.k || p1.z_max != p2.z_max)
    throw ValidationError("angle_comparison_trial: profiles must share a, k and z_max");
  if (!(p2.b >= p1.b))
    throw ValidationError("angle_comparison_trial: need b2 >= b1");
  if (trials < 1)
    throw ValidationError("angle_comparison_trial: trials must be >= 1");
  const double t_lo = -8.0 * p1.z_max;
  if (!(opt.t_hi > t_lo) || !(opt.s_hi > opt.s_lo) || opt.s_lo <= 0.0 ||
      opt.s_hi > std::min(meridian_arc(p1, p1.z_max), meridian_arc(p2, p2.z_max)))
    throw ValidationError("angle_comparison_trial: empty sampling window");
  Lcg rng(seed);
  std::vector<ComparisonTrial> out(static_cast<std::size_t>(trials));
  for (auto& tr : out) {
    tr.s = rng.uniform(opt.s_lo, opt.s_hi);
    tr.t = rng.uniform(t_lo, opt.t_hi);
  }
  parallel_for(out.size(), opt.jobs, [&](std::size_t i) {
    const int id = static_cast<int>(i);
    out[i] = compare_triangles(p1, p2, out[i].s, out[i].t, opt);
    out[i].trial = id;
  });
  if (opt.strict)
    for (const auto& tr : out)
      if (!tr.pass)
        throw ComparisonViolation("trial " + std::to_string(tr.trial) + ": Fermi vertices (0,0), (0," + num(tr.s) + "), (" +
                                  num(tr.t) + ",0): alpha1 = " + num(tr.alpha1) +
                                  ", alpha2 = " + num(tr.alpha2) + ", containment = " + num(tr.containment));
  return out;
}

} // namespace waistlab
