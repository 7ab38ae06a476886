#include "waistlab/surface.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace waistlab;

namespace {

// Central differences of r, independent of the analytic jet.
double fd1(const RevolutionProfile& p, double z, double h = 1e-5) { return (p.r(z + h) - p.r(z - h)) / (2 * h); }
double fd2(const RevolutionProfile& p, double z, double h = 1e-4) {
  return (p.r(z + h) - 2 * p.r(z) + p.r(z - h)) / (h * h);
}

} // namespace

TEST(Surface, RadiusValues) {
  EXPECT_DOUBLE_EQ(radius({1, 1, 2, 1}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(radius({1, 1, 2, 1}, 0.5), 1.0625);
  EXPECT_DOUBLE_EQ(radius({2, 0.5, 0, 1}, 1.0), 2.5);
  EXPECT_DOUBLE_EQ(radius({1, 1, 2, 1}, -0.5), 1.0625);
}

TEST(Surface, MetricCoefficients) {
  const auto m0 = metric_coefficients({1, 1, 2, 1}, 0.0);
  EXPECT_DOUBLE_EQ(m0.E, 1.0);
  EXPECT_DOUBLE_EQ(m0.G, 1.0);
  const auto m = metric_coefficients({1, 1, 2, 1}, 0.5);
  EXPECT_NEAR(m.E, 1.25, 1e-15);
  EXPECT_NEAR(m.G, 1.12890625, 1e-15);
  const auto mk0 = metric_coefficients({1, 1, 0, 1}, 0.0);
  EXPECT_DOUBLE_EQ(mk0.E, 1.0);
  EXPECT_DOUBLE_EQ(mk0.G, 1.0);
}

TEST(Surface, JetMatchesFiniteDifferences) {
  for (double k : {0.0, 2.0, 4.0}) {
    const RevolutionProfile p{1.3, 0.7, k, 1.0};
    for (double z : {-0.8, -0.3, 0.1, 0.45, 0.9}) {
      const auto j = p.jet(z);
      EXPECT_NEAR(j.r1, fd1(p, z), 1e-8) << "k=" << k << " z=" << z;
      EXPECT_NEAR(j.r2, fd2(p, z), 1e-5) << "k=" << k << " z=" << z;
    }
  }
}

TEST(Surface, GaussianCurvature) {
  EXPECT_DOUBLE_EQ(gaussian_curvature({1, 1, 2, 1}, 0.0), 0.0);
  // -r''/(r (1 + r'^2)^2) with r' = 4 z^3, r'' = 12 z^2 at z = 1/2
  const double expected = -3.0 / (1.0625 * 1.25 * 1.25);
  EXPECT_NEAR(gaussian_curvature({1, 1, 2, 1}, 0.5), expected, 1e-14);
  EXPECT_NEAR(gaussian_curvature({1, 1, 2, 1}, 0.5), -1.807, 1e-3);
  EXPECT_NEAR(gaussian_curvature({1, 1, 0, 1}, 0.0), -2.0, 1e-14);
}

TEST(Surface, CurvatureNonpositiveAndEven) {
  for (double k : {0.0, 2.0, 4.0})
    for (double z = -1.0; z <= 1.0; z += 0.01) {
      const RevolutionProfile p{1, 1, k, 1};
      EXPECT_LE(gaussian_curvature(p, z), 0.0);
      EXPECT_DOUBLE_EQ(gaussian_curvature(p, z), gaussian_curvature(p, -z));
    }
}

TEST(Surface, AreaElement) {
  EXPECT_DOUBLE_EQ(area_element({1, 1, 2, 1}, 0.0), 1.0);
  EXPECT_NEAR(area_element({1, 1, 2, 1}, 0.5), 1.0625 * std::sqrt(1.25), 1e-14);
  EXPECT_DOUBLE_EQ(area_element({3, 1, 2, 1}, 0.0), 3.0);
}

TEST(Surface, OutsideDomainThrows) {
  EXPECT_THROW(radius({1, 1, 2, 1}, 1.5), DomainError);
  EXPECT_THROW(gaussian_curvature({1, 1, 2, 0.5}, -0.6), DomainError);
}

TEST(Surface, Validation) {
  EXPECT_NO_THROW(validate(RevolutionProfile{1, 1, 2, 1}));
  try {
    validate(RevolutionProfile{1, 1, 3, 1});
    FAIL() << "odd k accepted";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("k must be even"), std::string::npos);
  }
  EXPECT_NO_THROW(validate(RevolutionProfile{1, 1, 3, 1}, true));
  EXPECT_THROW(validate(RevolutionProfile{0, 1, 2, 1}), ValidationError);
  EXPECT_THROW(validate(RevolutionProfile{1, -1, 2, 1}), ValidationError);
  EXPECT_THROW(validate(RevolutionProfile{1, 1, 2, 0}), ValidationError);
}

TEST(Surface, LiftedPointReducesAngle) {
  const LiftedPoint x{0.2, 7.0};
  const auto s = x.reduced();
  EXPECT_DOUBLE_EQ(s.z, 0.2);
  EXPECT_NEAR(s.theta, 7.0 - kTwoPi, 1e-15);
}
