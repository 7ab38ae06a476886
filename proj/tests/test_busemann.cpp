#include "waistlab/busemann.hpp"
#include "waistlab/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace waistlab;

namespace {

const RevolutionProfile kP{1, 1, 2, 1};

// Independent form of the integrand: 2 sqrt(r^2 - a^2)/r * sqrt(1 + r'^2),
// with r' by hand for r = a + b z^(2+k), z >= 0.
double oracle_integrand(double a, double b, double k, double t) {
  const double r = a + b * std::pow(t, 2 + k);
  const double r1 = b * (2 + k) * std::pow(t, 1 + k);
  return 2 * std::sqrt(r * r - a * a) / r * std::sqrt(1 + r1 * r1);
}

double oracle_barrier(double a, double b, double k, double z) {
  return quad::gauss_legendre([&](double t) { return oracle_integrand(a, b, k, t); }, 0.0, z, 200);
}

} // namespace

TEST(BusemannSum, WaistIsZero) { EXPECT_EQ(busemann_sum_quadrature(kP, 0.0), 0.0); }

TEST(BusemannSum, ReferenceValue) {
  const double oracle = oracle_barrier(1, 1, 2, 0.2);
  EXPECT_NEAR(busemann_sum_quadrature(kP, 0.2), oracle, 1e-11);
  EXPECT_NEAR(oracle, 7.54e-3, 5e-5);
}

TEST(BusemannSum, EvenAndMonotone) {
  double prev = 0.0;
  for (double z = 0.05; z <= 1.0; z += 0.05) {
    const double v = busemann_sum_quadrature(kP, z);
    EXPECT_GT(v, prev);
    EXPECT_DOUBLE_EQ(v, busemann_sum_quadrature(kP, -z));
    prev = v;
  }
}

TEST(BusemannSum, MatchesOracleAcrossProfiles) {
  for (double k : {0.0, 2.0, 4.0})
    for (double z : {0.1, 0.4, 0.8}) {
      const RevolutionProfile p{1.5, 0.8, k, 1};
      EXPECT_NEAR(busemann_sum_quadrature(p, z), oracle_barrier(1.5, 0.8, k, z), 1e-9) << k << " " << z;
    }
}

TEST(BusemannSum, SmallZLeadingOrder) {
  const double z = 1e-2;
  const double lead = 2 * std::sqrt(2.0) / 3 * z * z * z;
  EXPECT_NEAR(busemann_sum_quadrature(kP, z) / lead, 1.0, 1e-3);
  EXPECT_EQ(peierls_barrier_busemann(kP, 0.3), busemann_sum_quadrature(kP, 0.3));
}

TEST(LeadingCoefficient, Values) {
  EXPECT_NEAR(leading_coefficient(kP).coefficient, 2 * std::sqrt(2.0) / 3, 1e-15);
  EXPECT_DOUBLE_EQ(leading_coefficient(kP).power, 3.0);
  EXPECT_NEAR(leading_coefficient({1, 1, 0, 1}).coefficient, std::sqrt(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(leading_coefficient({1, 1, 0, 1}).power, 2.0);
  EXPECT_NEAR(leading_coefficient({2, 1, 2, 1}).coefficient, 2.0 / 3.0, 1e-15);
}

TEST(BusemannLimit, WaistPointIsZero) {
  EXPECT_NEAR(busemann_limit(kP, {0.0, 0.3}, 20.0), 0.0, 1e-12);
  EXPECT_NEAR(busemann_limit(kP, {0.0, 0.3}, 40.0, -1), 0.0, 1e-12);
}

TEST(BusemannLimit, ShortHorizonRejected) { EXPECT_THROW(busemann_limit(kP, {0.2, 0.0}, 10.0), DomainError); }

TEST(BusemannLimit, SumMatchesQuadrature) {
  const double lim = busemann_limit_sum(kP, {0.2, 0.0}, 50.0);
  EXPECT_NEAR(lim, busemann_sum_quadrature(kP, 0.2), 1e-3);
  // each one-sided value is half the sum by theta-reflection symmetry
  EXPECT_NEAR(busemann_limit(kP, {0.2, 0.0}, 50.0, +1), busemann_limit(kP, {0.2, 0.0}, 50.0, -1), 1e-9);
}

TEST(PowerFit, ExactPowerLaw) {
  std::vector<double> x, y;
  for (int i = 1; i <= 10; ++i) {
    x.push_back(0.02 * i);
    y.push_back(std::pow(0.02 * i, 3));
  }
  const auto f = fit_log_log(x, y);
  EXPECT_NEAR(f.power, 3.0, 1e-12);
  EXPECT_NEAR(f.coeff, 1.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
}

TEST(PowerFit, QuadratureCurves) {
  std::vector<double> zs;
  for (int i = 0; i <= 36; ++i)
    zs.push_back(0.02 + 0.005 * i);
  const auto f2 = fit_power_law(sample_barrier_quadrature(kP, zs), 0.02, 0.2);
  EXPECT_NEAR(f2.power, 3.0, 0.05);
  EXPECT_NEAR(f2.coeff / (2 * std::sqrt(2.0) / 3), 1.0, 0.05);
  const auto f4 = fit_power_law(sample_barrier_quadrature({1, 1, 4, 1}, zs), 0.02, 0.2);
  EXPECT_NEAR(f4.power, 4.0, 0.05);
}

TEST(PowerFit, Degenerate) {
  EXPECT_THROW(fit_log_log({0.1, 0.1}, {1.0, 2.0}), DegenerateFit);
  EXPECT_THROW(fit_log_log({0.1, 0.2}, {-1.0, 2.0}), DegenerateFit);
  BarrierCurve few;
  few.z = {0.1, 0.2, 0.3};
  few.value = {1, 2, 3};
  EXPECT_THROW(fit_power_law(few, 0.0, 1.0), DegenerateFit);
}
