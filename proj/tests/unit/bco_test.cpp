#include <gtest/gtest.h>

#include <cmath>

#include "bcom/bco.hpp"
#include "bcom/errors.hpp"

namespace bcom {
namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

const ConvexSet kBall2 = ConvexSet::ball(Vector::Zero(2), 1.0);

TEST(DelayStep, MetricAccumulates) {
  const DelayParams p{0.1, 1, 1.0, 1.0};
  Rng sphere(1);
  DelayState s = init_delay_state(kBall2, p, sphere);
  bco_delay_step(s, kBall2, 0.5, PsdMatrix::identity(2, 2.0), p, sphere);
  EXPECT_LE((s.a_hat.matrix() - 1.1 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DelayStep, GradientEstimateArithmetic) {
  const DelayParams p{0.1, 1, 1.0, 1.0};
  Rng sphere(1);
  DelayState s = init_delay_state(kBall2, p, sphere);
  s.v = vec({1.0, 0.0});
  bco_delay_step(s, kBall2, 3.0, PsdMatrix::identity(2), p, sphere);
  EXPECT_LE((s.last_gradient - vec({6.0, 0.0})).norm(), 1e-15);
}

TEST(DelayStep, ZeroLossKeepsIterate) {
  const DelayParams p{0.1, 1, 1.0, 1.0};
  Rng sphere(2);
  DelayState s = init_delay_state(kBall2, p, sphere);
  s.o = vec({0.2, -0.3});
  bco_delay_step(s, kBall2, 0.0, PsdMatrix::identity(2), p, sphere);
  EXPECT_LE(s.last_gradient.norm(), 0.0);
  EXPECT_LE((s.o - vec({0.2, -0.3})).norm(), 1e-12);
}

TEST(BcoamStep, MemoryOneUpdatesEveryStep) {
  const BcoParams p{0.05, 1, 1.0, 1.0};
  Rng bern(3);
  Rng sphere(4);
  BcomState s = init_bcom_state(kBall2, p, bern, sphere);
  for (int t = 0; t < 50; ++t) EXPECT_TRUE(bcoam_step(s, kBall2, 1.0, PsdMatrix::identity(2), p, bern, sphere).updated);
}

TEST(BcoamStep, BackToBackOnesDoNotBothUpdate) {
  const BcoParams p{0.05, 2, 1.0, 1.0};
  Rng bern(3);
  Rng sphere(4);
  BcomState s = init_bcom_state(kBall2, p, bern, sphere);
  s.zeros_run = 1;  // b_{t-1} = 0
  EXPECT_TRUE(bcoam_step(s, kBall2, 1.0, PsdMatrix::identity(2), p, true, sphere).updated);
  EXPECT_FALSE(bcoam_step(s, kBall2, 1.0, PsdMatrix::identity(2), p, true, sphere).updated);
}

TEST(BcoamStep, FrozenBetweenUpdates) {
  const BcoParams p{0.05, 3, 1.0, 1.0};
  Rng bern(3);
  Rng sphere(4);
  BcomState s = init_bcom_state(kBall2, p, bern, sphere);
  s.zeros_run = 0;
  const Vector o = s.o;
  const Vector z = s.z;
  const Matrix a = s.a_hat.matrix();
  EXPECT_FALSE(bcoam_step(s, kBall2, 2.0, PsdMatrix::identity(2), p, false, sphere).updated);
  EXPECT_FALSE(bcoam_step(s, kBall2, 2.0, PsdMatrix::identity(2), p, true, sphere).updated);
  EXPECT_EQ(s.o, o);
  EXPECT_EQ(s.z, z);
  EXPECT_EQ(s.a_hat.matrix(), a);
}

BcomInstance instance() {
  SyntheticBcomConfig c;
  c.d = 3;
  c.m = 3;
  c.horizon = 600;
  c.seed = 5;
  return make_synthetic_bcom_instance(c);
}

TEST(RunBcoam, SeedDeterminesTrajectory) {
  const BcomInstance inst = instance();
  const RunParams p{0.02, 3, inst.cert.alpha, 1.0, 77};
  const BcoRun a = run_bcoam(inst.losses, inst.set, p);
  const BcoRun b = run_bcoam(inst.losses, inst.set, p);
  EXPECT_EQ(a.decisions, b.decisions);
  EXPECT_EQ(a.incurred, b.incurred);
  EXPECT_EQ(a.trace.update_set, b.trace.update_set);
  for (std::size_t k = 1; k < a.trace.update_set.size(); ++k) {
    EXPECT_GE(a.trace.update_set[k] - a.trace.update_set[k - 1], 3);
  }
}

TEST(RunSphericalBaseline, SharesScheduleAndInitialGeometry) {
  const BcomInstance inst = instance();
  const BcoRun newton = run_bcoam(inst.losses, inst.set, {0.02, 3, inst.cert.alpha, 1.0, 77});
  const BcoRun spherical = run_spherical_baseline(inst.losses, inst.set, {0.001, 1.0, 3, 77});
  EXPECT_EQ(newton.trace.update_set, spherical.trace.update_set);
  EXPECT_LE((newton.decisions[0] - spherical.decisions[0]).norm(), 1e-15);
}

TEST(EstimatorMeanCheck, QuadraticMeanIsTheIterate) {
  const UnaryFunction f{[](const Vector& x) { return 0.5 * x.squaredNorm(); }, [](const Vector& x) { return x; }};
  Rng rng(8);
  const EstimatorReport r = estimator_mean_check(f, vec({1.0, 0.0}), PsdMatrix::identity(2), 200000, rng);
  EXPECT_LE(r.z_exact, 3.0);
  EXPECT_LE(r.z_smoothed, 3.0);
}

TEST(EstimatorMeanCheck, ConstantHasZeroMean) {
  const UnaryFunction f{[](const Vector&) { return 2.0; }, [](const Vector& x) { return Vector(Vector::Zero(x.size())); }};
  Rng rng(9);
  const EstimatorReport r = estimator_mean_check(f, vec({0.5, 0.5}), PsdMatrix::identity(2), 200000, rng);
  EXPECT_LE(r.z_exact, 3.0);
}

TEST(BcoParams, RejectsBadMemory) {
  Rng bern(1);
  Rng sphere(1);
  EXPECT_THROW(init_bcom_state(kBall2, {0.1, 0, 1.0, 1.0}, bern, sphere), ConfigError);
}

}  // namespace
}  // namespace bcom
