#pragma once

// Twisted Laplacian for omega = c dtheta scaled by lambda:
//
//   L f = Delta f + 2 lambda (c / r^2) d_theta f + lambda^2 (c^2 / r^2) f,
//
// discretized on the (theta, z) grid. The z part is in flux form,
// (1 / (r sqrt E)) d_z ((r / sqrt E) d_z f), with mirror ghost rows at
// z = +-z_max (zero normal flux). With weights W = area element x cell size
// (halved on boundary rows) the symmetric part is W-self-adjoint and constants
// are annihilated at lambda = 0.
//
// The principal eigenpair comes from shifted inverse iteration. Its
// eigenfunction is theta-invariant: on theta harmonics the twist only adds
// -n^2/r^2 (plus an imaginary drift) to the z operator, which lowers the
// numerical range, so the n = 0 block carries the top eigenvalue.
//
// Stationary density of the lambda-twisted motion: h_{+} h_{-} W, the Doob
// ground-state product of the principal eigenfunctions for +lambda and
// -lambda (the adjoint of L_{lambda} is L_{-lambda} in the W inner product).

#include "waistlab/surface.hpp"
#include "waistlab/grid.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <vector>

namespace waistlab {

struct TwistedOperator {
  RevolutionProfile profile;
  Grid grid;
  double lambda = 0.0;
  double c = 1.0;
  Eigen::SparseMatrix<double> matrix; ///< row k = j * n_theta + i
  std::vector<double> weights;        ///< W per node; sums to total area

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * grid.n_theta + i; }
};

/// Cell weights: area element times dtheta dz, halved on the two boundary rows.
inline std::vector<double> cell_weights(const RevolutionProfile& p, const Grid& g) {
  std::vector<double> w(g.size());
  const double base = g.dtheta() * g.dz();
  for (int j = 0; j < g.n_z; ++j) {
    const double f = (j == 0 || j == g.n_z - 1) ? 0.5 : 1.0;
    const double a = p.area(g.z(j)) * base * f;
    for (int i = 0; i < g.n_theta; ++i)
      w[static_cast<std::size_t>(j) * g.n_theta + i] = a;
  }
  return w;
}

inline TwistedOperator assemble_twisted_laplacian(const RevolutionProfile& p, const Grid& g, double lambda, double c) {
  if (g.n_theta < 32 || g.n_z < 32)
    throw ValidationError("assemble_twisted_laplacian: grid dims must be >= 32");
  if (std::abs(g.z_max - p.z_max) > 1e-12 * p.z_max)
    throw ValidationError("assemble_twisted_laplacian: grid and profile disagree on z_max");
  TwistedOperator op;
  op.profile = p;
  op.grid = g;
  op.lambda = lambda;
  op.c = c;
  op.weights = cell_weights(p, g);

  const int nt = g.n_theta, nz = g.n_z;
  const double dz = g.dz(), dth = g.dtheta();
  auto flux = [&](double z) {
    const RadiusJet j = p.jet(z);
    return j.r / std::sqrt(1.0 + j.r1 * j.r1);
  };
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(g.size() * 5);
  for (int j = 0; j < nz; ++j) {
    const double z = g.z(j);
    const double r = p.r(z);
    const double A = p.area(z);
    double up = j + 1 < nz ? flux(z + 0.5 * dz) : 0.0;
    double dn = j > 0 ? flux(z - 0.5 * dz) : 0.0;
    if (j == 0)
      up *= 2.0; // mirror: f_{-1} = f_{1}
    if (j == nz - 1)
      dn *= 2.0;
    const double cu = up / (A * dz * dz);
    const double cd = dn / (A * dz * dz);
    const double ct = 1.0 / (r * r * dth * dth);
    const double drift = lambda * c / (r * r * dth);
    const double pot = lambda * lambda * c * c / (r * r);
    for (int i = 0; i < nt; ++i) {
      const auto k = static_cast<int>(op.index(i, j));
      const int ip = (i + 1) % nt, im = (i + nt - 1) % nt;
      trip.emplace_back(k, static_cast<int>(op.index(ip, j)), ct + drift);
      trip.emplace_back(k, static_cast<int>(op.index(im, j)), ct - drift);
      if (j + 1 < nz)
        trip.emplace_back(k, static_cast<int>(op.index(i, j + 1)), cu);
      if (j > 0)
        trip.emplace_back(k, static_cast<int>(op.index(i, j - 1)), cd);
      trip.emplace_back(k, k, -2.0 * ct - cu - cd + pot);
    }
  }
  const auto n = static_cast<Eigen::Index>(g.size());
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.matrix.makeCompressed();
  return op;
}

struct EigenPair {
  double eigenvalue = 0.0;
  ScalarField eigenfunction; ///< positive, max-normalized to 1
  double residual = 0.0;     ///< ||L h - Lambda h||_inf / ||h||_inf
  int iterations = 0;
};

struct EigenOptions {
  double shift_margin = 0.1;
  double residual_tol = 1e-8;
  int max_iter = 500;
};

/// Largest-real eigenvalue and its positive eigenvector.
inline EigenPair principal_eigenpair(const TwistedOperator& op, const EigenOptions& opt = {}) {
  using Vec = Eigen::VectorXd;
  const auto n = op.matrix.rows();
  const double r_min = op.profile.a;
  const double sigma = op.lambda * op.lambda * op.c * op.c / (r_min * r_min) + opt.shift_margin;

  Eigen::SparseMatrix<double> B = -op.matrix;
  for (Eigen::Index k = 0; k < n; ++k)
    B.coeffRef(k, k) += sigma;
  B.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(B);
  lu.factorize(B);
  if (lu.info() != Eigen::Success)
    throw NotConverged("principal_eigenpair: factorization failed");

  Vec W(n);
  for (Eigen::Index k = 0; k < n; ++k)
    W[k] = op.weights[static_cast<std::size_t>(k)];

  Vec x = Vec::Ones(n);
  EigenPair out;
  double lam = 0.0, prev = std::numeric_limits<double>::infinity();
  double res = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opt.max_iter; ++it) {
    Vec y = lu.solve(x);
    const double scale = y.cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw NotConverged("principal_eigenpair: iteration broke down");
    y /= (y.sum() >= 0.0 ? scale : -scale);
    const Vec Ay = op.matrix * y;
    lam = y.dot(W.cwiseProduct(Ay)) / y.dot(W.cwiseProduct(y));
    res = (Ay - lam * y).cwiseAbs().maxCoeff() / y.cwiseAbs().maxCoeff();
    x = y;
    out.iterations = it;
    // Keep going a little past the contract so the eigenvalue itself settles.
    if (res <= 0.01 * opt.residual_tol ||
        (res <= opt.residual_tol && std::abs(lam - prev) <= 1e-14 * std::max(1.0, std::abs(lam))))
      break;
    prev = lam;
  }
  if (!(res <= opt.residual_tol))
    throw NotConverged("principal_eigenpair: residual " + num(res) + " after " +
                       std::to_string(out.iterations) + " iterations");
  if (x.minCoeff() <= 0.0)
    throw NonPositiveEigenvector("principal_eigenpair: eigenvector has nonpositive entries");
  out.eigenvalue = lam;
  out.residual = res;
  out.eigenfunction = ScalarField(op.grid);
  for (Eigen::Index k = 0; k < n; ++k)
    out.eigenfunction.values[static_cast<std::size_t>(k)] = x[k];
  return out;
}

struct StationaryMeasure {
  ScalarField density; ///< probability mass per node; sums to 1
};

/// Density proportional to h_{+} h_{-} W, normalized to total mass 1.
inline StationaryMeasure stationary_measure(const EigenPair& plus, const EigenPair& minus, const RevolutionProfile& p,
                                            double tol = 1e-6) {
  const Grid& g = plus.eigenfunction.grid;
  if (g.n_theta != minus.eigenfunction.grid.n_theta || g.n_z != minus.eigenfunction.grid.n_z)
    throw ValidationError("stationary_measure: grid mismatch");
  if (std::abs(plus.eigenvalue - minus.eigenvalue) > tol)
    throw EigenvalueMismatch("stationary_measure: |Lambda+ - Lambda-| = " +
                             num(std::abs(plus.eigenvalue - minus.eigenvalue)));
  const auto w = cell_weights(p, g);
  StationaryMeasure mu;
  mu.density = ScalarField(g);
  auto& d = mu.density.values;
  for (std::size_t k = 0; k < d.size(); ++k)
    d[k] = plus.eigenfunction.values[k] * minus.eigenfunction.values[k] * w[k];
  // Two passes of compensated normalization keep the total at 1 to rounding.
  for (int pass = 0; pass < 2; ++pass) {
    double s = 0.0, comp = 0.0;
    for (double v : d) {
      const double y = v - comp;
      const double t = s + y;
      comp = (t - s) - y;
      s = t;
    }
    for (double& v : d)
      v /= s;
  }
  return mu;
}

/// Mass of the rows with z in [z_lo, z_hi]; with `symmetric` the mirrored band
/// [-z_hi, -z_lo] is added (rows counted once).
inline double measure_of_set(const StationaryMeasure& mu, double z_lo, double z_hi, bool symmetric = true) {
  const Grid& g = mu.density.grid;
  if (!(z_lo >= 0.0) || !(z_hi > z_lo) || z_hi > g.z_max * (1.0 + 1e-14))
    throw DomainError("measure_of_set: need 0 <= z_lo < z_hi <= z_max");
  const double eps = 1e-9 * g.dz();
  double total = 0.0;
  for (int j = 0; j < g.n_z; ++j) {
    const double z = g.z(j);
    const bool in = (z >= z_lo - eps && z <= z_hi + eps) || (symmetric && -z >= z_lo - eps && -z <= z_hi + eps);
    if (!in)
      continue;
    for (int i = 0; i < g.n_theta; ++i)
      total += mu.density.at(i, j);
  }
  return std::min(1.0, total);
}

/// Top eigenvalue of the theta-averaged (n = 0) reduction of the twisted
/// operator: the z part plus lambda^2 c^2 / r^2 on one column of nodes. It is
/// symmetrized with the row weights and solved by a dense tridiagonal
/// eigensolver, independently of the 2D inverse iteration.
inline double theta_averaged_eigenvalue(const RevolutionProfile& p, const Grid& g, double lambda, double c) {
  const int nz = g.n_z;
  const double dz = g.dz();
  auto flux = [&](double z) {
    const RadiusJet j = p.jet(z);
    return j.r / std::sqrt(1.0 + j.r1 * j.r1);
  };
  Eigen::VectorXd diag(nz), sub(nz - 1);
  std::vector<double> w(static_cast<std::size_t>(nz));
  for (int j = 0; j < nz; ++j)
    w[static_cast<std::size_t>(j)] = p.area(g.z(j)) * ((j == 0 || j == nz - 1) ? 0.5 : 1.0);
  for (int j = 0; j < nz; ++j) {
    const double z = g.z(j);
    const double r = p.r(z);
    const double A = p.area(z);
    double up = j + 1 < nz ? flux(z + 0.5 * dz) : 0.0;
    double dn = j > 0 ? flux(z - 0.5 * dz) : 0.0;
    if (j == 0)
      up *= 2.0;
    if (j == nz - 1)
      dn *= 2.0;
    diag[j] = -(up + dn) / (A * dz * dz) + lambda * lambda * c * c / (r * r);
    if (j + 1 < nz) {
      const double cu = up / (A * dz * dz);
      sub[j] = cu * std::sqrt(w[static_cast<std::size_t>(j)] / w[static_cast<std::size_t>(j) + 1]);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NotConverged("theta_averaged_eigenvalue: tridiagonal solver failed");
  return es.eigenvalues().maxCoeff();
}

} // namespace waistlab
