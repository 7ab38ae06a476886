#include "waistlab/ldp.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace waistlab;

namespace {

const RevolutionProfile kP{1, 1, 2, 1};

const SweepTable& small_sweep() {
  static const SweepTable t = lambda_sweep(kP, 1.0, Grid(32, 97, 1.0), {4.0, 8.0, 12.0, 16.0},
                                           {{0.0, 0.05}, {0.2, 0.3}, {0.2, 0.4}, {0.3, 0.4}}, 2, 1.0);
  return t;
}

} // namespace

TEST(RateEstimate, SyntheticExponential) {
  const std::vector<double> lam{8, 16, 32, 64};
  std::vector<double> mu;
  for (double l : lam)
    mu.push_back(std::exp(-0.01 * l));
  const auto r = rate_estimate(lam, mu);
  EXPECT_NEAR(r.rate, 0.01, 1e-14);
  for (double v : r.sequence)
    EXPECT_NEAR(v, 0.01, 1e-14);
}

TEST(RateEstimate, PrefactorDoesNotBiasSlope) {
  const std::vector<double> lam{8, 16, 32, 64, 128};
  std::vector<double> mu;
  for (double l : lam)
    mu.push_back(0.3 * std::exp(-0.05 * l));
  EXPECT_NEAR(rate_estimate(lam, mu).rate, 0.05, 1e-13);
}

TEST(RateEstimate, RequiresDecay) {
  EXPECT_THROW(rate_estimate({8, 16, 32, 64}, {0.1, 0.1, 0.2, 0.3}), InsufficientDecay);
  EXPECT_NO_THROW(rate_estimate({8, 16, 32, 64}, {0.1, 0.1, 0.2, 0.3}, false));
  EXPECT_THROW(rate_estimate({8, 16, 32}, {0.1, 0.05, 0.01}), InsufficientDecay);
  EXPECT_THROW(rate_estimate({8, 16, 32, 64}, {0.1, 0.0, 0.01, 0.001}), InsufficientDecay);
}

TEST(Sweep, Validation) {
  EXPECT_THROW(validate_sweep(kP, {}, {}), ValidationError);
  EXPECT_THROW(validate_sweep(kP, {8, 4}, {}), ValidationError);
  EXPECT_THROW(validate_sweep(kP, {4, 8}, {{0.2, 0.6}}), ValidationError);
  EXPECT_THROW(validate_sweep(kP, {4, 8}, {{0.3, 0.2}}), ValidationError);
  EXPECT_NO_THROW(validate_sweep(kP, {4, 8}, {{0.2, 0.5}}));
}

TEST(Sweep, PreflightRejectsUnderresolvedGroundState) {
  EXPECT_THROW(lambda_sweep(kP, 1.0, Grid(32, 33, 1.0), {8, 16, 32, 64}, {{0.2, 0.3}}), PreflightFailure);
}

TEST(Sweep, MeasuresAreConsistent) {
  const auto& t = small_sweep();
  ASSERT_EQ(t.points.size(), 4u);
  for (const auto& p : t.points) {
    EXPECT_NEAR(p.Lambda_plus, p.Lambda_minus, 1e-8 * std::abs(p.Lambda_plus));
    EXPECT_LT(p.mass_defect, 1e-12);
    // nested bands: [0.2, 0.3] and [0.3, 0.4] inside [0.2, 0.4]
    EXPECT_LE(p.measures[1], p.measures[2]);
    EXPECT_LE(p.measures[3], p.measures[2]);
  }
  // the waist band gains mass as lambda grows, far bands lose it
  EXPECT_GT(t.points.back().measures[0], t.points.front().measures[0]);
  EXPECT_LT(t.points.back().measures[3], t.points.front().measures[3]);
}

TEST(Sweep, WorkerCountDoesNotChangeResults) {
  const auto serial = lambda_sweep(kP, 1.0, Grid(32, 97, 1.0), {4.0, 8.0, 12.0, 16.0},
                                   {{0.0, 0.05}, {0.2, 0.3}, {0.2, 0.4}, {0.3, 0.4}}, 1, 1.0);
  const auto& threaded = small_sweep();
  for (std::size_t i = 0; i < serial.points.size(); ++i)
    for (std::size_t b = 0; b < serial.bands.size(); ++b)
      EXPECT_EQ(serial.points[i].measures[b], threaded.points[i].measures[b]);
}

TEST(Distance, IsMeridianArc) {
  EXPECT_DOUBLE_EQ(distance_to_waist(kP, 0.0), 0.0);
  EXPECT_NEAR(distance_to_waist(kP, -0.4), meridian_arc(kP, 0.4), 0.0);
  EXPECT_NEAR(distance_to_waist(kP, -0.4), 0.401856, 1e-6);
}

TEST(BandRecords, BarrierAndWaistFlag) {
  const auto recs = band_records(small_sweep());
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_TRUE(recs[0].touches_waist);
  EXPECT_EQ(recs[0].barrier, 0.0);
  EXPECT_TRUE(std::isnan(recs[0].relative_error));
  EXPECT_FALSE(recs[1].touches_waist);
  EXPECT_NEAR(recs[1].barrier, peierls_barrier_busemann(kP, 0.2), 1e-15);
  EXPECT_GT(recs[3].rate.rate, recs[1].rate.rate);
}

TEST(DeviationReport, TooFewBandsIsDegenerate) { EXPECT_THROW(compare_to_theorem1(small_sweep()), DegenerateFit); }
