#pragma once

// Large-deviation rates of the twisted stationary measures on rotationally
// invariant bands, compared with the Peierls barrier and with the power law
// d^(2 + k/2) in the distance to the waist.
//
// A band's distance to the waist is the meridian arc length from z = 0 to
// z_lo, the meridian being the shortest connection.

#include "waistlab/busemann.hpp"
#include "waistlab/diffusion.hpp"
#include "waistlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace waistlab {

struct Band {
  double z_lo = 0.0;
  double z_hi = 0.0;
};

struct SweepPoint {
  double lambda = 0.0;
  double Lambda_plus = 0.0;
  double Lambda_minus = 0.0;
  double residual_plus = 0.0;
  double residual_minus = 0.0;
  double half_width_cells = 0.0; ///< rows from the waist until h drops to 1/2
  double mass_defect = 0.0;      ///< |total mass - 1|
  double theta_oscillation = 0.0; ///< max per-row oscillation of h_{+} and h_{-}
  std::vector<double> measures;  ///< one per band
};

struct SweepTable {
  RevolutionProfile profile;
  double c = 1.0;
  Grid grid;
  std::vector<Band> bands;
  std::vector<SweepPoint> points; ///< ascending lambda
};

/// Rows from the waist row until the theta-averaged eigenfunction falls to half
/// its waist value (n_z if it never does).
inline double half_width_cells(const EigenPair& e) {
  const auto rows = e.eigenfunction.row_means();
  const int j0 = e.eigenfunction.grid.waist_row();
  const double peak = rows[j0];
  for (int d = 1; j0 + d < static_cast<int>(rows.size()); ++d)
    if (rows[j0 + d] <= 0.5 * peak)
      return d;
  return static_cast<double>(rows.size());
}

inline void validate_sweep(const RevolutionProfile& p, const std::vector<double>& lambdas, const std::vector<Band>& bands) {
  if (lambdas.empty())
    throw ValidationError("lambda_sweep: empty lambda list");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 0.0))
      throw ValidationError("lambda_sweep: lambdas must be >= 0");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1]))
      throw ValidationError("lambda_sweep: lambdas must be strictly ascending");
  }
  for (const auto& b : bands)
    if (!(b.z_lo >= 0.0) || !(b.z_hi > b.z_lo) || b.z_hi > 0.5 * p.z_max * (1.0 + 1e-12))
      throw ValidationError("band [" + num(b.z_lo) + ", " + num(b.z_hi) + "] must satisfy 0 <= z_lo < z_hi <= z_max/2");
}

/// Stationary measures of all bands for every lambda. Runs one solve pair per
/// worker. The largest lambda must resolve the ground state with at least
/// `min_half_width_cells` rows, otherwise PreflightFailure.
inline SweepTable lambda_sweep(const RevolutionProfile& p, double c, const Grid& grid, const std::vector<double>& lambdas,
                               const std::vector<Band>& bands, int jobs = 1, double min_half_width_cells = 8.0,
                               const EigenOptions& eig = {}) {
  validate_sweep(p, lambdas, bands);
  SweepTable t;
  t.profile = p;
  t.c = c;
  t.grid = grid;
  t.bands = bands;
  t.points.resize(lambdas.size());
  parallel_for(lambdas.size(), jobs, [&](std::size_t i) {
    const double lam = lambdas[i];
    try {
      const auto plus = principal_eigenpair(assemble_twisted_laplacian(p, grid, lam, c), eig);
      const auto minus = principal_eigenpair(assemble_twisted_laplacian(p, grid, -lam, c), eig);
      const auto mu = stationary_measure(plus, minus, p);
      SweepPoint& pt = t.points[i];
      pt.lambda = lam;
      pt.Lambda_plus = plus.eigenvalue;
      pt.Lambda_minus = minus.eigenvalue;
      pt.residual_plus = plus.residual;
      pt.residual_minus = minus.residual;
      pt.half_width_cells = half_width_cells(plus);
      double total = 0.0;
      for (double v : mu.density.values)
        total += v;
      pt.mass_defect = std::abs(total - 1.0);
      pt.theta_oscillation = std::max(plus.eigenfunction.theta_oscillation(), minus.eigenfunction.theta_oscillation());
      for (const auto& b : bands)
        pt.measures.push_back(measure_of_set(mu, b.z_lo, b.z_hi));
    } catch (const Error& e) {
      throw NotConverged("lambda = " + num(lam) + ": " + e.what());
    }
  });
  if (t.points.back().lambda > 0.0 && t.points.back().half_width_cells < min_half_width_cells)
    throw PreflightFailure("lambda_sweep: ground state at lambda = " + num(t.points.back().lambda) + " spans " +
                           num(t.points.back().half_width_cells) + " cells (< " + num(min_half_width_cells) +
                           "); refine the grid");
  return t;
}

struct RateEstimate {
  double rate = 0.0;      ///< -slope of ln(mu) against lambda over the fit window
  double intercept = 0.0; ///< absorbs the O(ln lambda) prefactor
  std::vector<double> sequence; ///< -(1/lambda) ln(mu) per lambda (NaN at lambda = 0)
  std::size_t window_begin = 0; ///< first index of the fit window
};

/// Rate from ln(mu) against lambda over the upper half of the lambda list.
/// With require_decay, throws InsufficientDecay unless ln(mu) strictly decreases
/// over the window.
inline RateEstimate rate_estimate(const std::vector<double>& lambdas, const std::vector<double>& measures,
                                  bool require_decay = true) {
  const std::size_t n = lambdas.size();
  if (n < 4 || measures.size() != n)
    throw InsufficientDecay("rate_estimate: need at least 4 lambda points");
  for (double m : measures)
    if (!(m > 0.0))
      throw InsufficientDecay("rate_estimate: measures must be positive");
  RateEstimate r;
  r.window_begin = n / 2;
  r.sequence.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    r.sequence[i] = lambdas[i] > 0.0 ? -std::log(measures[i]) / lambdas[i] : std::nan("");
  double sx = 0, sy = 0;
  const std::size_t m = n - r.window_begin;
  for (std::size_t i = r.window_begin; i < n; ++i) {
    sx += lambdas[i];
    sy += std::log(measures[i]);
    if (require_decay && i > r.window_begin && !(std::log(measures[i]) < std::log(measures[i - 1])))
      throw InsufficientDecay("rate_estimate: ln(mu) not decreasing over the fit window");
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = r.window_begin; i < n; ++i) {
    sxx += (lambdas[i] - mx) * (lambdas[i] - mx);
    sxy += (lambdas[i] - mx) * (std::log(measures[i]) - my);
  }
  const double slope = sxy / sxx;
  r.rate = -slope;
  r.intercept = my - slope * mx;
  return r;
}

inline RateEstimate rate_estimate(const SweepTable& t, std::size_t band, bool require_decay = true) {
  std::vector<double> lam, mu;
  for (const auto& p : t.points) {
    lam.push_back(p.lambda);
    mu.push_back(p.measures.at(band));
  }
  return rate_estimate(lam, mu, require_decay);
}

/// Meridian arc length from the waist to height z.
inline double distance_to_waist(const RevolutionProfile& p, double z) {
  require_in_domain(p, z, "distance_to_waist");
  return std::abs(meridian_arc(p, z));
}

struct BandRecord {
  Band band;
  double inf_distance = 0.0;
  std::vector<double> lambdas;
  std::vector<double> measures;
  RateEstimate rate;
  double barrier = 0.0;        ///< inf of the Peierls barrier over the band, B(z_lo)
  double relative_error = 0.0; ///< |rate - barrier| / barrier (NaN when barrier = 0)
  bool touches_waist = false;
  std::string error; ///< set when the rate could not be estimated (rate is NaN)
};

struct DeviationReport {
  std::vector<BandRecord> bands;
  double power = 0.0; ///< fitted exponent of rate against inf_distance
  double coeff = 0.0;
  double r_squared = 0.0;
  double expected_power = 0.0; ///< 2 + k/2
  double D = 0.0;              ///< smallest D with d^p / D <= rate <= D d^p over the fitted bands
};

/// Per-band rates and barrier errors. Bands whose measure does not decay keep
/// a NaN rate and an error note.
inline std::vector<BandRecord> band_records(const SweepTable& t) {
  const RevolutionProfile& p = t.profile;
  std::vector<BandRecord> out;
  for (std::size_t b = 0; b < t.bands.size(); ++b) {
    BandRecord rec;
    rec.band = t.bands[b];
    rec.touches_waist = rec.band.z_lo <= 0.0;
    rec.inf_distance = distance_to_waist(p, rec.band.z_lo);
    for (const auto& pt : t.points) {
      rec.lambdas.push_back(pt.lambda);
      rec.measures.push_back(pt.measures.at(b));
    }
    rec.barrier = peierls_barrier_busemann(p, rec.band.z_lo);
    try {
      rec.rate = rate_estimate(rec.lambdas, rec.measures, !rec.touches_waist);
    } catch (const InsufficientDecay& e) {
      rec.error = e.what();
      rec.rate = rate_estimate(rec.lambdas, rec.measures, false);
      rec.rate.rate = std::nan("");
    }
    rec.relative_error = rec.barrier > 0.0 ? std::abs(rec.rate.rate - rec.barrier) / rec.barrier : std::nan("");
    out.push_back(rec);
  }
  return out;
}

/// Band records plus the log-log fit of rate against distance over the bands
/// that do not touch the waist, have a rate, and lie at distance [0.05, 0.4];
/// at least 5 distinct distances are required.
inline DeviationReport compare_to_theorem1(const SweepTable& t) {
  DeviationReport rep;
  rep.expected_power = 2.0 + 0.5 * t.profile.k;
  rep.bands = band_records(t);
  std::vector<double> xs, ys;
  for (const auto& rec : rep.bands)
    if (rec.error.empty() && !rec.touches_waist && rec.inf_distance >= 0.05 - 1e-12 &&
        rec.inf_distance <= 0.4 + 1e-12) {
      xs.push_back(rec.inf_distance);
      ys.push_back(rec.rate.rate);
    }
  std::vector<double> distinct = xs;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 5)
    throw DegenerateFit("compare_to_theorem1: need >= 5 bands at distinct distances in [0.05, 0.4]");
  const PowerFit fit = fit_log_log(xs, ys);
  rep.power = fit.power;
  rep.coeff = fit.coeff;
  rep.r_squared = fit.r_squared;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double model = std::pow(xs[i], rep.expected_power);
    rep.D = std::max({rep.D, ys[i] / model, model / ys[i]});
  }
  return rep;
}

} // namespace waistlab
