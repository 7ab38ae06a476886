#include "waistlab/diffusion.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

using namespace waistlab;

namespace {

const RevolutionProfile kP{1, 1, 2, 1};

// Dense, unsymmetrized Sturm-Liouville matrix for the theta-constant block:
// (1/A) d/dz ((r/sqrt E) d/dz f) + lambda^2 c^2 / r^2 f, cell-centred fluxes,
// reflecting ends via mirror ghost rows. Its top eigenvalue comes from a
// general (nonsymmetric) eigensolver.
double oracle_top_eigenvalue(const RevolutionProfile& p, int nz, double lambda, double c) {
  const double h = 2 * p.z_max / (nz - 1);
  auto z = [&](int j) { return -p.z_max + j * h; };
  auto kappa = [&](double t) {
    const double r = p.r(t);
    const double r1 = (p.r(t + 1e-7) - p.r(t - 1e-7)) / 2e-7;
    return r / std::sqrt(1 + r1 * r1);
  };
  auto area = [&](double t) {
    const double r1 = (p.r(t + 1e-7) - p.r(t - 1e-7)) / 2e-7;
    return p.r(t) * std::sqrt(1 + r1 * r1);
  };
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nz, nz);
  for (int j = 0; j < nz; ++j) {
    const double A = area(z(j)) * h * h;
    // a mirrored ghost row sees the mirrored face: the interior face flux
    double up = kappa(z(j) + 0.5 * h), dn = kappa(z(j) - 0.5 * h);
    if (j == 0)
      dn = up;
    if (j == nz - 1)
      up = dn;
    const int ju = j + 1 < nz ? j + 1 : j - 1; // mirror ghost
    const int jd = j > 0 ? j - 1 : j + 1;
    M(j, ju) += up / A;
    M(j, jd) += dn / A;
    M(j, j) += -(up + dn) / A + lambda * lambda * c * c / (p.r(z(j)) * p.r(z(j)));
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  return es.eigenvalues().real().maxCoeff();
}

Eigen::VectorXd apply(const TwistedOperator& op, const ScalarField& f) {
  Eigen::Map<const Eigen::VectorXd> x(f.values.data(), static_cast<Eigen::Index>(f.values.size()));
  return op.matrix * x;
}

} // namespace

TEST(TwistedLaplacian, KillsConstantsAtZeroTwist) {
  const Grid g(32, 65, 1.0);
  const auto op = assemble_twisted_laplacian(kP, g, 0.0, 1.0);
  const auto y = apply(op, ScalarField(g, 1.0));
  EXPECT_LT(y.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(TwistedLaplacian, FlatCylinderSymbol) {
  // b -> 0: eigenfunctions cos(n theta) cos(m pi (z + 1) / 2) with eigenvalue
  // -(n^2 / a^2 + (m pi / 2)^2); the error is O(grid^2) in the interior.
  const RevolutionProfile flat{1, 1e-12, 2, 1};
  double prev_err = 0.0;
  for (int refine : {1, 2}) {
    const Grid g(32 * refine, 64 * refine + 1, 1.0);
    const auto op = assemble_twisted_laplacian(flat, g, 0.0, 1.0);
    const int n = 2, m = 3;
    ScalarField f(g);
    for (int j = 0; j < g.n_z; ++j)
      for (int i = 0; i < g.n_theta; ++i)
        f.at(i, j) = std::cos(n * g.theta(i)) * std::cos(m * std::numbers::pi * (g.z(j) + 1) / 2);
    const double ev = -(n * n + std::pow(m * std::numbers::pi / 2, 2));
    const auto y = apply(op, f);
    double err = 0.0;
    for (std::size_t k = 0; k < f.values.size(); ++k)
      err = std::max(err, std::abs(y[static_cast<Eigen::Index>(k)] - ev * f.values[k]));
    EXPECT_LT(err, 0.5);
    if (refine == 2) {
      EXPECT_GT(prev_err / err, 3.0);
    }
    prev_err = err;
  }
}

TEST(TwistedLaplacian, RejectsSmallGrid) {
  EXPECT_THROW(assemble_twisted_laplacian(kP, Grid(16, 65, 1.0), 1.0, 1.0), ValidationError);
}

TEST(PrincipalEigenpair, ZeroTwist) {
  const Grid g(32, 65, 1.0);
  const auto e = principal_eigenpair(assemble_twisted_laplacian(kP, g, 0.0, 1.0));
  EXPECT_NEAR(e.eigenvalue, 0.0, 1e-8);
  for (double v : e.eigenfunction.values)
    EXPECT_NEAR(v, 1.0, 1e-6);
}

TEST(PrincipalEigenpair, MatchesDenseOracle) {
  const Grid g(32, 65, 1.0);
  for (double lambda : {2.0, 8.0, 16.0}) {
    const auto e = principal_eigenpair(assemble_twisted_laplacian(kP, g, lambda, 1.0));
    const double oracle = oracle_top_eigenvalue(kP, g.n_z, lambda, 1.0);
    EXPECT_NEAR(e.eigenvalue, oracle, 1e-6 * std::max(1.0, std::abs(oracle))) << "lambda=" << lambda;
    EXPECT_NEAR(theta_averaged_eigenvalue(kP, g, lambda, 1.0), oracle, 1e-6 * std::max(1.0, std::abs(oracle)));
    EXPECT_LT(e.residual, 1e-8);
  }
}

TEST(PrincipalEigenpair, SymmetricInLambda) {
  const Grid g(48, 65, 1.0);
  const auto p = principal_eigenpair(assemble_twisted_laplacian(kP, g, 12.0, 1.0));
  const auto m = principal_eigenpair(assemble_twisted_laplacian(kP, g, -12.0, 1.0));
  EXPECT_NEAR(p.eigenvalue, m.eigenvalue, 1e-9 * std::abs(p.eigenvalue));
}

TEST(PrincipalEigenpair, PositiveThetaInvariantPeakedAtWaist) {
  const Grid g(32, 65, 1.0);
  const auto e = principal_eigenpair(assemble_twisted_laplacian(kP, g, 16.0, 1.0));
  for (double v : e.eigenfunction.values)
    EXPECT_GT(v, 0.0);
  EXPECT_LT(e.eigenfunction.theta_oscillation(), 1e-10);
  const auto rows = e.eigenfunction.row_means();
  EXPECT_NEAR(rows[static_cast<std::size_t>(g.waist_row())], 1.0, 1e-12);
}

TEST(StationaryMeasure, AreaMeasureAtZeroTwist) {
  const Grid g(32, 65, 1.0);
  const auto e = principal_eigenpair(assemble_twisted_laplacian(kP, g, 0.0, 1.0));
  const auto mu = stationary_measure(e, e, kP);
  const auto w = cell_weights(kP, g);
  double total = 0.0;
  for (double v : w)
    total += v;
  for (std::size_t k = 0; k < w.size(); ++k)
    EXPECT_NEAR(mu.density.values[k], w[k] / total, 1e-9);
}

TEST(StationaryMeasure, MassAndBands) {
  const Grid g(32, 65, 1.0);
  const auto p = principal_eigenpair(assemble_twisted_laplacian(kP, g, 16.0, 1.0));
  const auto m = principal_eigenpair(assemble_twisted_laplacian(kP, g, -16.0, 1.0));
  const auto mu = stationary_measure(p, m, kP);
  double total = 0.0;
  for (double v : mu.density.values)
    total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(measure_of_set(mu, 0.0, 1.0), 1.0, 1e-12);
  EXPECT_NEAR(measure_of_set(mu, 0.0, 6 * g.dz()) + measure_of_set(mu, 7 * g.dz(), 1.0), 1.0, 1e-12);
  EXPECT_THROW(measure_of_set(mu, 0.3, 0.3), DomainError);
}

TEST(StationaryMeasure, ConcentratesAtWaist) {
  const Grid g(32, 97, 1.0);
  double prev = 0.0;
  for (double lambda : {0.0, 8.0, 32.0}) {
    const auto p = principal_eigenpair(assemble_twisted_laplacian(kP, g, lambda, 1.0));
    const auto m = principal_eigenpair(assemble_twisted_laplacian(kP, g, -lambda, 1.0));
    const double near = measure_of_set(stationary_measure(p, m, kP), 0.0, 0.1);
    EXPECT_GT(near, prev);
    prev = near;
  }
}

TEST(StationaryMeasure, EigenvalueMismatch) {
  const Grid g(32, 65, 1.0);
  const auto a = principal_eigenpair(assemble_twisted_laplacian(kP, g, 4.0, 1.0));
  const auto b = principal_eigenpair(assemble_twisted_laplacian(kP, g, 8.0, 1.0));
  EXPECT_THROW(stationary_measure(a, b, kP), EigenvalueMismatch);
}
