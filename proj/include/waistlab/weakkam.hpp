#pragma once

// Discrete Lax-Oleinik semigroup for L(x, v) = 1/2 |v|^2 - omega(v), with
// omega = c dtheta, on a (theta, z) grid of the annulus.
//
//   (T- f)(x) = min_y [ f(y) + A(y -> x) ] + c0 tau
//   (T+ f)(x) = max_y [ f(y) - A(x -> y) ] - c0 tau
//
// A is the one-step action over time tau. Its kinetic part is the energy of a
// discrete geodesic chain with M segments; the theta coordinates of the chain
// are eliminated in closed form, leaving a smooth convex problem in the
// interior z values which is solved by Newton's method. The chain is
// reversible, so both operators share one action table.
//
// Feet y lie on theta grid nodes and on a z sub-lattice (rows / qz); field
// values between rows are linear interpolants, so both operators stay
// monotone and commute with constants. z is reflected at +-z_max (mirror
// ghost rows). tau is snapped so the waist orbit moves by a whole number of
// theta cells per step, which makes the waist exactly calibrated.

#include "waistlab/grid.hpp"
#include "waistlab/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace waistlab {

struct LagrangianSpec {
  double omega_coefficient = 1.0; ///< c in omega = c dtheta
};

// ---------------------------------------------------------------------------
// One-step action

namespace wk_detail {

/// Chain of M segments from z0 to z1 over time tau; Newton on the interior.
class ChainSolver {
public:
  ChainSolver(const RevolutionProfile& p, double c) : p_(p), c_(c) {}

  struct Result {
    double value = 0.0;  ///< action including -c dtheta
    double dtheta = 0.0; ///< optimal (free) or imposed theta increment
    int iterations = 0;
  };

  /// dtheta empty: theta increment is optimized as well.
  Result solve(double z0, double z1, double tau, int M, std::optional<double> dtheta) {
    dt_ = tau / M;
    M_ = M;
    x_.assign(M + 1, 0.0);
    for (int i = 0; i <= M; ++i)
      x_[i] = z0 + (z1 - z0) * static_cast<double>(i) / M;
    x_[M] = z1;
    free_ = !dtheta.has_value();
    dth_ = free_ ? 0.0 : *dtheta;

    Result res;
    double F = evaluate(true);
    const int n = M - 1;
    for (int it = 0; it < 60 && n > 0; ++it) {
      res.iterations = it + 1;
      // Newton step, damped (Levenberg) when the Hessian is not positive definite.
      bool ok = false;
      double slope = 0.0;
      double mu = 0.0;
      for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
        if (attempt > 0) {
          const double add = attempt == 1 ? 1e-3 / dt_ : mu * 9.0;
          for (double& d : diag_)
            d += add;
          mu += add;
        }
        ok = newton_direction();
        slope = 0.0;
        for (int i = 0; i < n; ++i)
          slope += grad_[i] * dir_[i];
        ok = ok && slope < 0.0;
      }
      if (!ok) {
        slope = 0.0;
        for (int i = 0; i < n; ++i) {
          dir_[i] = -grad_[i] * dt_;
          slope += grad_[i] * dir_[i];
        }
      }
      double step_max = 0.0;
      for (int i = 0; i < n; ++i)
        step_max = std::max(step_max, std::abs(dir_[i]));
      if (step_max < 1e-15 || slope > -1e-300)
        break;
      base_.assign(x_.begin(), x_.end());
      double t = 1.0;
      double Fn = F;
      for (int ls = 0; ls < 40; ++ls) {
        for (int i = 0; i < n; ++i)
          x_[i + 1] = base_[i + 1] + t * dir_[i];
        Fn = evaluate(false);
        if (Fn <= F + 1e-4 * t * slope || std::abs(Fn - F) <= 1e-16 * std::max(1.0, std::abs(F)))
          break;
        t *= 0.5;
      }
      if (!(Fn <= F)) {
        x_.assign(base_.begin(), base_.end());
        break;
      }
      const double dF = F - Fn;
      F = evaluate(true);
      if (t * step_max < 1e-14 || dF <= 1e-17 * std::max(1.0, std::abs(F)))
        break;
    }
    res.value = F;
    res.dtheta = free_ ? c_ * dt_ * S_ : dth_;
    return res;
  }

private:
  double evaluate(bool derivatives) {
    const int M = M_;
    double kin = 0.0;
    double S = 0.0;
    if (derivatives) {
      E_.resize(M);
      E1_.resize(M);
      E2_.resize(M);
      g1_.resize(M);
      g2_.resize(M);
    }
    for (int i = 0; i < M; ++i) {
      const double m = 0.5 * (x_[i] + x_[i + 1]);
      const RadiusJet j = p_.jet(m);
      const double E = 1.0 + j.r1 * j.r1;
      const double d = x_[i + 1] - x_[i];
      kin += E * d * d;
      const double ir = 1.0 / j.r;
      const double g = ir * ir;
      S += g;
      if (derivatives) {
        E_[i] = E;
        E1_[i] = 2.0 * j.r1 * j.r2;
        E2_[i] = 2.0 * (j.r2 * j.r2 + j.r1 * j.r3);
        g1_[i] = -2.0 * j.r1 * g * ir;
        g2_[i] = -2.0 * j.r2 * g * ir + 6.0 * j.r1 * j.r1 * g * g;
      }
    }
    kin /= 2.0 * dt_;
    S_ = S;
    double T, T1, T2;
    if (free_) {
      T = -0.5 * c_ * c_ * dt_ * S;
      T1 = -0.5 * c_ * c_ * dt_;
      T2 = 0.0;
    } else {
      T = dth_ * dth_ / (2.0 * dt_ * S) - c_ * dth_;
      T1 = -dth_ * dth_ / (2.0 * dt_ * S * S);
      T2 = dth_ * dth_ / (dt_ * S * S * S);
    }
    if (derivatives)
      assemble(T1, T2);
    return kin + T;
  }

  // Gradient and Hessian (tridiagonal + rank one) with respect to x_1..x_{M-1}.
  void assemble(double T1, double T2) {
    const int n = M_ - 1;
    grad_.assign(n, 0.0);
    diag_.assign(n, 0.0);
    off_.assign(n > 0 ? n - 1 : 0, 0.0);
    sgrad_.assign(n, 0.0);
    rank1_ = T2;
    const double idt = 1.0 / dt_;
    for (int s = 0; s < M_; ++s) {
      // segment s joins x_s (u) and x_{s+1} (v)
      const double d = x_[s + 1] - x_[s];
      const double E = E_[s], E1 = E1_[s], E2 = E2_[s];
      const double phi_v = 0.25 * E1 * d * d * idt + E * d * idt;
      const double phi_u = 0.25 * E1 * d * d * idt - E * d * idt;
      const double phi_vv = 0.125 * E2 * d * d * idt + E1 * d * idt + E * idt;
      const double phi_uu = 0.125 * E2 * d * d * idt - E1 * d * idt + E * idt;
      const double phi_uv = 0.125 * E2 * d * d * idt - E * idt;
      const double s1 = 0.5 * g1_[s];
      const double s2 = 0.25 * g2_[s];
      const int iu = s - 1; // unknown index of x_s
      const int iv = s;     // unknown index of x_{s+1}
      if (iu >= 0) {
        grad_[iu] += phi_u + T1 * s1;
        diag_[iu] += phi_uu + T1 * s2;
        sgrad_[iu] += s1;
      }
      if (iv < n) {
        grad_[iv] += phi_v + T1 * s1;
        diag_[iv] += phi_vv + T1 * s2;
        sgrad_[iv] += s1;
      }
      if (iu >= 0 && iv < n)
        off_[iu] += phi_uv + T1 * s2;
    }
  }

  // Thomas solve of the tridiagonal part; returns false on a nonpositive pivot.
  bool thomas(const std::vector<double>& rhs, std::vector<double>& out) {
    const int n = static_cast<int>(rhs.size());
    cp_.resize(n);
    out.resize(n);
    double piv = diag_[0];
    if (!(piv > 0.0))
      return false;
    cp_[0] = n > 1 ? off_[0] / piv : 0.0;
    out[0] = rhs[0] / piv;
    for (int i = 1; i < n; ++i) {
      piv = diag_[i] - off_[i - 1] * cp_[i - 1];
      if (!(piv > 0.0))
        return false;
      cp_[i] = i + 1 < n ? off_[i] / piv : 0.0;
      out[i] = (rhs[i] - off_[i - 1] * out[i - 1]) / piv;
    }
    for (int i = n - 2; i >= 0; --i)
      out[i] -= cp_[i] * out[i + 1];
    return true;
  }

  bool newton_direction() {
    const int n = M_ - 1;
    dir_.assign(n, 0.0);
    neg_.resize(n);
    for (int i = 0; i < n; ++i)
      neg_[i] = -grad_[i];
    if (!thomas(neg_, y_))
      return false;
    dir_ = y_;
    if (rank1_ != 0.0) {
      if (!thomas(sgrad_, w_))
        return false;
      double sy = 0.0, sw = 0.0;
      for (int i = 0; i < n; ++i) {
        sy += sgrad_[i] * y_[i];
        sw += sgrad_[i] * w_[i];
      }
      const double f = rank1_ * sy / (1.0 + rank1_ * sw);
      for (int i = 0; i < n; ++i)
        dir_[i] = y_[i] - f * w_[i];
    }
    return true;
  }

  const RevolutionProfile& p_;
  double c_;
  double dt_ = 0.0;
  int M_ = 1;
  bool free_ = true;
  double dth_ = 0.0;
  double S_ = 0.0;
  double rank1_ = 0.0;
  std::vector<double> x_, base_, E_, E1_, E2_, g1_, g2_, grad_, diag_, off_, sgrad_, cp_, y_, w_, neg_, dir_;
};

inline int default_segments(double tau) { return std::max(8, static_cast<int>(std::ceil(tau / 0.125))); }

} // namespace wk_detail

/// One-step action from p to q in time tau: discrete geodesic energy minus
/// c * (theta_q - theta_p). segments = 0 picks a default from tau.
inline double edge_action(const RevolutionProfile& prof, const LagrangianSpec& spec, const LiftedPoint& p,
                          const LiftedPoint& q, double tau, int segments = 0) {
  if (!(tau > 0.0))
    throw DomainError("edge_action: tau must be positive");
  const int M = segments > 0 ? segments : wk_detail::default_segments(tau);
  wk_detail::ChainSolver chain(prof, spec.omega_coefficient);
  return chain.solve(p.z, q.z, tau, M, q.theta_lift - p.theta_lift).value;
}

// ---------------------------------------------------------------------------
// Scheme

struct SchemeOptions {
  double tau = 2.0;        ///< requested step (time units); snapped, see LaxOleinikScheme::tau
  int z_subdivisions = 4;  ///< foot sub-rows per z cell
  double vz_max = 0.45;    ///< max |dz| per unit time reached by the stencil
  int segments = 0;        ///< chain segments; 0 = default from tau
  int theta_slack = 2;     ///< extra theta cells around the admissible velocity band
};

/// Precomputed stencil and action tables for a fixed (profile, spec, grid, tau).
class LaxOleinikScheme {
public:
  LaxOleinikScheme(const RevolutionProfile& prof, const LagrangianSpec& spec, const Grid& grid,
                   const SchemeOptions& opt = {})
      : prof_(prof), spec_(spec), grid_(grid), opt_(opt) {
    if (!(opt.tau > 0.0))
      throw ValidationError("weakkam: tau must be positive");
    if (opt.z_subdivisions < 1)
      throw ValidationError("weakkam: z_subdivisions must be >= 1");
    if (std::abs(grid.z_max - prof.z_max) > 1e-12 * prof.z_max)
      throw ValidationError("weakkam: grid and profile disagree on z_max");
    const double c = spec.omega_coefficient;
    const double dth = grid.dtheta();
    // Snap tau: the waist orbit has theta-velocity c / a^2.
    tau_ = opt.tau;
    const double cells = c * opt.tau / (prof.a * prof.a * dth);
    if (c != 0.0) {
      const double n = std::max(1.0, std::round(std::abs(cells)));
      tau_ = n * dth * prof.a * prof.a / std::abs(c);
    }
    segments_ = opt.segments > 0 ? opt.segments : wk_detail::default_segments(tau_);
    q_ = opt.z_subdivisions;
    reach_ = std::max(1, static_cast<int>(std::ceil(opt.vz_max * tau_ / grid.dz() * q_)));

    const double r_hi = prof.r(prof.z_max + opt.vz_max * tau_);
    const double v_lo = std::min({0.0, c / (r_hi * r_hi), c / (prof.a * prof.a)});
    const double v_hi = std::max({0.0, c / (r_hi * r_hi), c / (prof.a * prof.a)});
    const double pad = 0.1 * (v_hi - v_lo) * tau_;
    m_lo_ = static_cast<int>(std::floor((v_lo * tau_ - pad) / dth)) - opt.theta_slack;
    m_hi_ = static_cast<int>(std::ceil((v_hi * tau_ + pad) / dth)) + opt.theta_slack;
    build_feet();
  }

  double tau() const { return tau_; }
  int segments() const { return segments_; }
  int reach() const { return reach_; }
  int z_subdivisions() const { return q_; }
  int m_lo() const { return m_lo_; }
  int m_hi() const { return m_hi_; }
  const Grid& grid() const { return grid_; }
  const RevolutionProfile& profile() const { return prof_; }
  const LagrangianSpec& spec() const { return spec_; }
  int n_feet() const { return 2 * reach_ + 1; }

  /// Height of foot o (in [-reach, reach]) for row j; may lie in a ghost row.
  double foot_z(int j, int o) const { return grid_.z(j) + o * grid_.dz() / q_; }

  /// Linear interpolation of a row profile at foot (j, o), mirrored at the boundary.
  double interp(const double* rows, int j, int o) const {
    const Foot& f = feet_[static_cast<std::size_t>(j) * n_feet() + (o + reach_)];
    return f.w0 * rows[f.i0] + f.w1 * rows[f.i1];
  }

  /// Theta-reduced table: min over theta offsets of the one-step action.
  const std::vector<double>& reduced_table() const {
    if (reduced_.empty())
      build_reduced();
    return reduced_;
  }
  /// Argmin theta offset for the reduced table.
  const std::vector<int>& reduced_offsets() const {
    if (reduced_.empty())
      build_reduced();
    return reduced_m_;
  }

  /// Full table over theta offsets m_lo..m_hi; index ((j * n_feet + o) * n_m + m).
  const std::vector<double>& full_table() const {
    if (full_.empty())
      build_full();
    return full_;
  }
  int n_offsets() const { return m_hi_ - m_lo_ + 1; }

  // Theta-invariant operators on row profiles (one value per z row).
  std::vector<double> backward_rows(const std::vector<double>& f, double c0) const {
    return apply_rows(f, c0, -1);
  }
  std::vector<double> forward_rows(const std::vector<double>& f, double c0) const {
    return apply_rows(f, c0, +1);
  }

  // General operators on full fields.
  ScalarField backward(const ScalarField& f, double c0) const { return apply_field(f, c0, -1); }
  ScalarField forward(const ScalarField& f, double c0) const { return apply_field(f, c0, +1); }

private:
  struct Foot {
    int i0 = 0, i1 = 0;
    double w0 = 1.0, w1 = 0.0;
  };

  void build_feet() {
    const int nf = n_feet();
    feet_.resize(static_cast<std::size_t>(grid_.n_z) * nf);
    const std::int64_t top = static_cast<std::int64_t>(grid_.n_z - 1) * q_;
    for (int j = 0; j < grid_.n_z; ++j) {
      for (int o = -reach_; o <= reach_; ++o) {
        // Position in sub-row units, reflected into [0, top].
        std::int64_t pos = static_cast<std::int64_t>(j) * q_ + o;
        const std::int64_t period = 2 * top;
        pos %= period;
        if (pos < 0)
          pos += period;
        if (pos > top)
          pos = period - pos;
        Foot f;
        f.i0 = static_cast<int>(pos / q_);
        const int rem = static_cast<int>(pos % q_);
        if (rem == 0) {
          f.i1 = f.i0;
        } else {
          f.i1 = f.i0 + 1;
          f.w1 = static_cast<double>(rem) / q_;
          f.w0 = 1.0 - f.w1;
        }
        feet_[static_cast<std::size_t>(j) * nf + (o + reach_)] = f;
      }
    }
  }

  void build_reduced() const {
    const int nf = n_feet();
    const double dth = grid_.dtheta();
    reduced_.assign(static_cast<std::size_t>(grid_.n_z) * nf, 0.0);
    reduced_m_.assign(reduced_.size(), 0);
    wk_detail::ChainSolver chain(prof_, spec_.omega_coefficient);
    for (int j = 0; j < grid_.n_z; ++j) {
      const double zx = grid_.z(j);
      for (int o = -reach_; o <= reach_; ++o) {
        const double zy = foot_z(j, o);
        const auto free = chain.solve(zy, zx, tau_, segments_, std::nullopt);
        const int m0 = static_cast<int>(std::floor(free.dtheta / dth + 1e-9));
        double best = std::numeric_limits<double>::infinity();
        int best_m = m0;
        for (int m = m0 - 1; m <= m0 + 2; ++m) {
          const double v = chain.solve(zy, zx, tau_, segments_, m * dth).value;
          if (v < best) {
            best = v;
            best_m = m;
          }
        }
        const std::size_t idx = static_cast<std::size_t>(j) * nf + (o + reach_);
        reduced_[idx] = best;
        reduced_m_[idx] = best_m;
      }
    }
  }

  void build_full() const {
    const int nf = n_feet();
    const int nm = n_offsets();
    const double dth = grid_.dtheta();
    full_.assign(static_cast<std::size_t>(grid_.n_z) * nf * nm, 0.0);
    wk_detail::ChainSolver chain(prof_, spec_.omega_coefficient);
    for (int j = 0; j < grid_.n_z; ++j)
      for (int o = -reach_; o <= reach_; ++o)
        for (int m = m_lo_; m <= m_hi_; ++m)
          full_[(static_cast<std::size_t>(j) * nf + (o + reach_)) * nm + (m - m_lo_)] =
              chain.solve(foot_z(j, o), grid_.z(j), tau_, segments_, m * dth).value;
  }

  // sign -1: backward (min, +action, +c0 tau); +1: forward (max, -action, -c0 tau).
  std::vector<double> apply_rows(const std::vector<double>& f, double c0, int sign) const {
    if (static_cast<int>(f.size()) != grid_.n_z)
      throw ValidationError("weakkam: row profile size mismatch");
    const auto& table = reduced_table();
    const int nf = n_feet();
    std::vector<double> out(grid_.n_z);
    for (int j = 0; j < grid_.n_z; ++j) {
      const double* K = &table[static_cast<std::size_t>(j) * nf];
      double best = sign < 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      for (int o = -reach_; o <= reach_; ++o) {
        const double v = interp(f.data(), j, o);
        if (sign < 0) {
          const double cand = v + K[o + reach_];
          if (cand < best)
            best = cand;
        } else {
          const double cand = v - K[o + reach_];
          if (cand > best)
            best = cand;
        }
      }
      out[j] = best - sign * c0 * tau_;
    }
    return out;
  }

  ScalarField apply_field(const ScalarField& f, double c0, int sign) const {
    if (f.grid.n_theta != grid_.n_theta || f.grid.n_z != grid_.n_z)
      throw ValidationError("weakkam: field grid mismatch");
    const auto& table = full_table();
    const int nf = n_feet();
    const int nm = n_offsets();
    const int nt = grid_.n_theta;
    ScalarField out(grid_);
    std::vector<double> column(grid_.n_z);
    // Interpolated field per (theta node, foot): gather per theta column.
    std::vector<double> interp_cache(static_cast<std::size_t>(nt) * nf);
    for (int j = 0; j < grid_.n_z; ++j) {
      for (int i = 0; i < nt; ++i) {
        for (int jj = 0; jj < grid_.n_z; ++jj)
          column[jj] = f.at(i, jj);
        for (int o = -reach_; o <= reach_; ++o)
          interp_cache[static_cast<std::size_t>(i) * nf + (o + reach_)] = interp(column.data(), j, o);
      }
      for (int i = 0; i < nt; ++i) {
        double best = sign < 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        for (int o = -reach_; o <= reach_; ++o) {
          const double* K = &table[(static_cast<std::size_t>(j) * nf + (o + reach_)) * nm];
          for (int m = m_lo_; m <= m_hi_; ++m) {
            // backward: foot at theta_i - m; forward: endpoint at theta_i + m
            int it = sign < 0 ? (i - m) % nt : (i + m) % nt;
            if (it < 0)
              it += nt;
            const double v = interp_cache[static_cast<std::size_t>(it) * nf + (o + reach_)];
            if (sign < 0) {
              const double cand = v + K[m - m_lo_];
              if (cand < best)
                best = cand;
            } else {
              const double cand = v - K[m - m_lo_];
              if (cand > best)
                best = cand;
            }
          }
        }
        out.at(i, j) = best - sign * c0 * tau_;
      }
    }
    return out;
  }

  RevolutionProfile prof_;
  LagrangianSpec spec_;
  Grid grid_;
  SchemeOptions opt_;
  double tau_ = 0.0;
  int segments_ = 8;
  int q_ = 1;
  int reach_ = 1;
  int m_lo_ = 0, m_hi_ = 0;
  std::vector<Foot> feet_;
  mutable std::vector<double> reduced_;
  mutable std::vector<int> reduced_m_;
  mutable std::vector<double> full_;
};

/// True when every row of f is constant in theta to within tol.
inline bool theta_invariant(const ScalarField& f, double tol = 0.0) { return f.theta_oscillation() <= tol; }

/// T- applied once. Theta-invariant inputs take the reduced path.
inline ScalarField lax_oleinik_backward(const LaxOleinikScheme& s, const ScalarField& f, double c0) {
  if (theta_invariant(f)) {
    std::vector<double> rows(f.grid.n_z);
    for (int j = 0; j < f.grid.n_z; ++j)
      rows[j] = f.at(0, j);
    return ScalarField::from_rows(f.grid, s.backward_rows(rows, c0));
  }
  return s.backward(f, c0);
}

inline ScalarField lax_oleinik_forward(const LaxOleinikScheme& s, const ScalarField& f, double c0) {
  if (theta_invariant(f)) {
    std::vector<double> rows(f.grid.n_z);
    for (int j = 0; j < f.grid.n_z; ++j)
      rows[j] = f.at(0, j);
    return ScalarField::from_rows(f.grid, s.forward_rows(rows, c0));
  }
  return s.forward(f, c0);
}

// ---------------------------------------------------------------------------
// Critical value

struct CriticalValueOptions {
  int iterations = 2000;
  double tail_fraction = 0.25;
  double tolerance = 1e-10;
  double lo = -1.0; ///< bisection bracket; widened from the drift scale when negative
  double hi = -1.0;
};

struct CriticalValueResult {
  double c0 = 0.0;
  double drift_at_zero = 0.0; ///< per-step drift of max(T-^n 0) with c0 = 0
  int bisections = 0;
};

namespace wk_detail {

// Median of pairwise slopes (Theil-Sen).
inline double median_slope(const std::vector<double>& y, std::size_t first) {
  std::vector<double> slopes;
  const std::size_t n = y.size();
  const std::size_t stride = std::max<std::size_t>(1, (n - first) / 64);
  for (std::size_t i = first; i < n; i += stride)
    for (std::size_t k = i + stride; k < n; k += stride)
      slopes.push_back((y[k] - y[i]) / static_cast<double>(k - i));
  if (slopes.empty())
    return 0.0;
  auto mid = slopes.begin() + static_cast<std::ptrdiff_t>(slopes.size() / 2);
  std::nth_element(slopes.begin(), mid, slopes.end());
  if (slopes.size() % 2 == 1)
    return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(slopes.begin(), mid);
  return 0.5 * (lower + upper);
}

} // namespace wk_detail

/// Bisection on c0 for zero long-run drift of T- iterates from f = 0.
/// T- with candidate c0 equals T- with 0 shifted by c0 * tau, so the drift
/// series is computed once and re-used for every candidate.
inline CriticalValueResult critical_value(const LaxOleinikScheme& s, const CriticalValueOptions& opt = {}) {
  if (!s.grid().has_waist_row())
    throw ValidationError("critical_value: n_z must be odd so the waist is a grid row");
  const int n = std::max(16, opt.iterations);
  std::vector<double> f(s.grid().n_z, 0.0);
  std::vector<double> series(n);
  for (int it = 0; it < n; ++it) {
    f = s.backward_rows(f, 0.0);
    series[it] = *std::max_element(f.begin(), f.end());
  }
  const auto first = static_cast<std::size_t>(std::floor((1.0 - opt.tail_fraction) * n));
  const double slope0 = wk_detail::median_slope(series, first);
  const double tau = s.tau();
  auto drift = [&](double c) { return slope0 + c * tau; };

  CriticalValueResult res;
  res.drift_at_zero = slope0;
  const double scale = std::max(1.0, std::abs(slope0) / tau);
  double lo = opt.lo >= 0.0 ? opt.lo : -4.0 * scale;
  double hi = opt.hi >= 0.0 ? opt.hi : 4.0 * scale;
  if ((drift(lo) > 0.0) == (drift(hi) > 0.0))
    throw NoBracket("critical_value: drift has the same sign at both bracket ends");
  while (hi - lo > opt.tolerance && res.bisections < 200) {
    const double mid = 0.5 * (lo + hi);
    (drift(mid) < 0.0 ? lo : hi) = mid;
    ++res.bisections;
  }
  res.c0 = 0.5 * (lo + hi);
  return res;
}

// ---------------------------------------------------------------------------
// Weak-KAM pair, barrier, Aubry set

struct WeakKamOptions {
  double tol = 1e-8;     ///< stop when osc(T f - f) < tol
  int max_iter = 200000;
};

struct WeakKamPair {
  ScalarField u_minus;
  ScalarField u_plus;
  int iterations_minus = 0;
  int iterations_plus = 0;
  double residual_minus = 0.0; ///< max |T- u- - u-| after normalization
  double residual_plus = 0.0;
};

namespace wk_detail {

inline double oscillation(const std::vector<double>& a, const std::vector<double>& b) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return hi - lo;
}

inline std::vector<double> iterate_to_fixed_point(const LaxOleinikScheme& s, double c0, int sign,
                                                  const WeakKamOptions& opt, int& iterations) {
  const int j0 = s.grid().waist_row();
  std::vector<double> f(s.grid().n_z, 0.0);
  for (iterations = 0; iterations < opt.max_iter;) {
    std::vector<double> g = sign < 0 ? s.backward_rows(f, c0) : s.forward_rows(f, c0);
    ++iterations;
    const double osc = oscillation(g, f);
    // Remove the drift so values stay bounded even when c0 is slightly off.
    const double shift = g[j0];
    for (double& v : g)
      v -= shift;
    f.swap(g);
    if (osc < opt.tol)
      return f;
  }
  throw NotConverged("weak_kam_pair: no fixed point after " + std::to_string(opt.max_iter) +
                     " iterations (c0 off-critical?)");
}

} // namespace wk_detail

/// Fixed points of T- and T+ modulo constants, normalized to 0 on the waist row.
/// Starting from f = 0 keeps every iterate theta-invariant, so the reduced
/// operators are used throughout.
inline WeakKamPair weak_kam_pair(const LaxOleinikScheme& s, double c0, const WeakKamOptions& opt = {}) {
  if (!s.grid().has_waist_row())
    throw ValidationError("weak_kam_pair: n_z must be odd so the waist is a grid row");
  WeakKamPair out;
  const auto um = wk_detail::iterate_to_fixed_point(s, c0, -1, opt, out.iterations_minus);
  const auto up = wk_detail::iterate_to_fixed_point(s, c0, +1, opt, out.iterations_plus);
  const auto tm = s.backward_rows(um, c0);
  const auto tp = s.forward_rows(up, c0);
  for (std::size_t j = 0; j < um.size(); ++j) {
    out.residual_minus = std::max(out.residual_minus, std::abs(tm[j] - um[j]));
    out.residual_plus = std::max(out.residual_plus, std::abs(tp[j] - up[j]));
  }
  out.u_minus = ScalarField::from_rows(s.grid(), um);
  out.u_plus = ScalarField::from_rows(s.grid(), up);
  return out;
}

/// Pointwise u- - u+.
inline ScalarField peierls_barrier_grid(const ScalarField& u_minus, const ScalarField& u_plus) {
  if (u_minus.grid.n_theta != u_plus.grid.n_theta || u_minus.grid.n_z != u_plus.grid.n_z)
    throw ValidationError("peierls_barrier_grid: grid mismatch");
  ScalarField out(u_minus.grid);
  for (std::size_t k = 0; k < out.values.size(); ++k)
    out.values[k] = u_minus.values[k] - u_plus.values[k];
  return out;
}

struct GridNode {
  int theta_index = 0;
  int z_index = 0;
};

/// Nodes where the barrier is below tol.
inline std::vector<GridNode> aubry_set_detect(const ScalarField& barrier, double tol) {
  std::vector<GridNode> nodes;
  if (tol > 0.0) {
    for (int j = 0; j < barrier.grid.n_z; ++j)
      for (int i = 0; i < barrier.grid.n_theta; ++i)
        if (barrier.at(i, j) < tol)
          nodes.push_back({i, j});
  }
  if (nodes.empty())
    throw EmptyAubrySet("aubry_set_detect: no node below tol (tol under the discretization floor?)");
  return nodes;
}

/// Distinct z rows among the detected nodes, ascending.
inline std::vector<int> aubry_rows(const std::vector<GridNode>& nodes) {
  std::vector<int> rows;
  for (const auto& n : nodes)
    rows.push_back(n.z_index);
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

} // namespace waistlab
