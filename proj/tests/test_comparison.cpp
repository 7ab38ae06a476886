#include "waistlab/comparison.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace waistlab;

namespace {
const RevolutionProfile kP{1, 1, 2, 1};
const RevolutionProfile kFlat{1, 1e-10, 2, 1};
constexpr double kPi = std::numbers::pi;
} // namespace

TEST(Lcg, ReferenceSequence) {
  // 64-bit wraparound arithmetic evaluated with arbitrary-precision integers
  Lcg g(12345);
  EXPECT_EQ(g.next(), 2021368500568277588ULL);
  EXPECT_EQ(g.next(), 4895494634720187923ULL);
  Lcg u(12345);
  EXPECT_DOUBLE_EQ(u.uniform(), 0.10957860598549463);
  EXPECT_DOUBLE_EQ(u.uniform(), 0.26538529591773785);
  EXPECT_DOUBLE_EQ(u.uniform(), 0.8856239926684798);
}

TEST(WrapAngle, Range) {
  EXPECT_DOUBLE_EQ(wrap_angle(0.5), 0.5);
  EXPECT_NEAR(wrap_angle(2 * kPi + 0.5), 0.5, 1e-15);
  EXPECT_NEAR(wrap_angle(-kPi), kPi, 1e-15);
  EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-15);
}

TEST(Polygon, FlatLimitAngleSum) {
  const auto tri = build_triangle(kFlat, {0.0, 0.0}, {0.3, 0.1}, {-0.1, -0.4});
  EXPECT_NEAR(tri.angle_sum(), kPi, 1e-6);
  const auto gb = gauss_bonnet(tri);
  EXPECT_LE(std::abs(gb.residual), 1e-8);
  EXPECT_NEAR(gb.curvature_integral, 0.0, 1e-8);
}

TEST(Polygon, FlatRightTriangle) {
  // legs 0.3 and 0.4 on a flat cylinder of radius 1: atan(0.3/0.4) at c(t)
  const auto tri = comparison_triangle(kFlat, 0.3, -0.4);
  EXPECT_NEAR(tri.angles[0], kPi / 2, 1e-8);
  EXPECT_NEAR(tri.angles[1], std::atan2(0.4, 0.3), 1e-8);
  EXPECT_NEAR(tri.angles[2], std::atan2(0.3, 0.4), 1e-8);
}

TEST(Polygon, SymmetricBaseAngles) {
  const auto tri = build_triangle(kP, {0.2, -0.05}, {0.2, 0.05}, {0.45, 0.0});
  EXPECT_NEAR(tri.angles[0], tri.angles[1], 1e-6);
}

TEST(Polygon, DegenerateRejected) {
  EXPECT_THROW(build_triangle(kP, {0.0, 0.0}, {0.0, 0.5}, {0.0, 1.0}), DegenerateTriangle);
  EXPECT_THROW(build_triangle(kP, {0.1, 0.0}, {0.1, 0.0}, {0.3, 1.0}), DegenerateTriangle);
  EXPECT_THROW(build_polygon(kP, {{0.0, 0.0}, {0.1, 0.0}}), DegenerateTriangle);
}

TEST(GaussBonnet, SmallTriangleNearHeightPointThree) {
  const auto tri = build_triangle(kP, {0.28, 0.0}, {0.32, 0.03}, {0.3, -0.04});
  EXPECT_LE(std::abs(gauss_bonnet(tri).residual), 1e-4);
  EXPECT_LT(gauss_bonnet(tri).curvature_integral, 0.0);
}

TEST(GaussBonnet, TriangleAndBox) {
  const auto tri = comparison_triangle(kP, 0.4, -1.5);
  const auto box = comparison_box(kP, 0.4, -1.5);
  EXPECT_LE(std::abs(gauss_bonnet(tri).residual), 1e-4);
  EXPECT_LE(std::abs(gauss_bonnet(box).residual), 1e-4);
  // nonpositive curvature: angle deficit
  EXPECT_LT(tri.angle_sum(), kPi);
  EXPECT_LT(box.angle_sum(), 2 * kPi);
}

TEST(GaussBonnet, ResidualIsSecondOrder) {
  PolygonOptions o64, o128;
  o64.samples_per_side = 64;
  o128.samples_per_side = 128;
  const double r64 = gauss_bonnet(comparison_triangle(kP, 0.45, -2.0, o64)).residual;
  const double r128 = gauss_bonnet(comparison_triangle(kP, 0.45, -2.0, o128)).residual;
  EXPECT_NEAR(r64 / r128, 4.0, 0.5);
}

TEST(Comparison, IdenticalProfilesAgree) {
  const auto r = compare_triangles(kP, kP, 0.3, -1.0);
  EXPECT_NEAR(r.margin, 0.0, 1e-8);
  EXPECT_TRUE(r.pass);
}

TEST(Comparison, AnglesOrderedAlongChain) {
  const RevolutionProfile p05{1, 0.5, 2, 1}, p2{1, 2, 2, 1};
  const double a05 = comparison_triangle(p05, 0.35, -1.2).angles[1];
  const double a1 = comparison_triangle(kP, 0.35, -1.2).angles[1];
  const double a2 = comparison_triangle(p2, 0.35, -1.2).angles[1];
  EXPECT_GE(a05, a1);
  EXPECT_GE(a1, a2);
}

TEST(Comparison, MarginVanishesAsVertexReachesWaist) {
  const RevolutionProfile p05{1, 0.5, 2, 1}, p2{1, 2, 2, 1};
  double prev = std::numeric_limits<double>::infinity();
  for (double s : {0.4, 0.2, 0.1, 0.05}) {
    const double m = compare_triangles(p05, p2, s, -1.0).margin;
    EXPECT_GE(m, 0.0);
    EXPECT_LT(m, prev);
    prev = m;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(Comparison, SeededTrialsPass) {
  const RevolutionProfile p1{1, 0.5, 2, 1}, p2{1, 2, 2, 1};
  const auto trials = angle_comparison_trial(p1, p2, 20, 12345);
  ASSERT_EQ(trials.size(), 20u);
  for (const auto& t : trials) {
    EXPECT_TRUE(t.pass) << "trial " << t.trial << " margin " << t.margin << " containment " << t.containment;
    EXPECT_LE(t.gb_residual1, 1e-4);
    EXPECT_LE(t.gb_residual2, 1e-4);
  }
}

TEST(Comparison, WorkerCountDoesNotChangeResults) {
  const RevolutionProfile p1{1, 0.5, 2, 1}, p2{1, 2, 2, 1};
  ComparisonOptions serial, threaded;
  threaded.jobs = 3;
  const auto a = angle_comparison_trial(p1, p2, 4, 7, serial);
  const auto b = angle_comparison_trial(p1, p2, 4, 7, threaded);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].s, b[i].s);
    EXPECT_EQ(a[i].t, b[i].t);
    EXPECT_EQ(a[i].alpha1, b[i].alpha1);
    EXPECT_EQ(a[i].alpha2, b[i].alpha2);
  }
}

TEST(Comparison, Validation) {
  const RevolutionProfile p1{1, 0.5, 2, 1}, p2{1, 2, 2, 1};
  EXPECT_THROW(angle_comparison_trial(p2, p1, 1, 1), ValidationError);
  EXPECT_THROW(angle_comparison_trial(p1, RevolutionProfile{1, 2, 4, 1}, 1, 1), ValidationError);
  EXPECT_THROW(angle_comparison_trial(p1, p2, 0, 1), ValidationError);
}
