#include <gtest/gtest.h>

#include <cmath>

#include "bcom/checks.hpp"
#include "bcom/errors.hpp"
#include "bcom/harness.hpp"

namespace bcom {
namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

AffineSumObjective centered(const std::vector<Vector>& centers) {
  AffineSumObjective obj;
  for (const Vector& c : centers) {
    obj.losses.push_back(BaseLoss::centered_quadratic(Matrix::Identity(c.size(), c.size()), c, {1.0, 1.0}));
    obj.offsets.push_back(Vector::Zero(c.size()));
    obj.maps.push_back(Matrix::Identity(c.size(), c.size()));
  }
  return obj;
}

TEST(BestFixedComparator, CommonMinimizer) {
  const Vector z = vec({0.3, -0.2, 0.1});
  const ComparatorResult r = best_fixed_comparator(centered({z, z, z, z}), ConvexSet::ball(Vector::Zero(3), 1.0));
  EXPECT_LE((r.x - z).norm(), 1e-6);
  EXPECT_NEAR(r.value, 0.0, 1e-12);
}

TEST(BestFixedComparator, TwoQuadraticsMeetHalfway) {
  const Vector a = vec({0.5, 0.0});
  const Vector b = vec({-0.1, 0.4});
  const ComparatorResult r = best_fixed_comparator(centered({a, b}), ConvexSet::ball(Vector::Zero(2), 1.0));
  EXPECT_LE((r.x - 0.5 * (a + b)).norm(), 1e-8);
}

TEST(BestFixedComparator, BoundaryMinimizer) {
  const ComparatorResult r = best_fixed_comparator(centered({vec({3.0, 0.0})}), ConvexSet::ball(Vector::Zero(2), 1.0));
  EXPECT_LE((r.x - vec({1.0, 0.0})).norm(), 1e-8);
}

TEST(ComputeRegret, IdenticalSeriesGiveZero) {
  const std::vector<double> x{1.0, 2.0, 0.5};
  const RegretRecord r = compute_regret(x, x, 1);
  for (double c : r.cumulative) EXPECT_EQ(c, 0.0);
}

TEST(ComputeRegret, UnitGapOverTenSteps) {
  std::vector<double> comp(10, 0.25);
  std::vector<double> inc(10, 1.25);
  const RegretRecord r = compute_regret(inc, comp, 1);
  EXPECT_DOUBLE_EQ(r.final_regret(), 10.0);
  EXPECT_DOUBLE_EQ(r.cumulative[4], 5.0);
}

TEST(ComputeRegret, LengthMismatchThrows) {
  EXPECT_THROW(compute_regret({1.0, 2.0}, {1.0}, 1), HorizonMismatchError);
}

TEST(FitLogLog, ExactPowerLaws) {
  const std::vector<double> t{1024, 2048, 4096, 8192, 16384};
  std::vector<double> sqrt_t;
  std::vector<double> two_thirds;
  for (double x : t) {
    sqrt_t.push_back(3.0 * std::sqrt(x));
    two_thirds.push_back(0.7 * std::pow(x, 2.0 / 3.0));
  }
  EXPECT_NEAR(fit_loglog(t, sqrt_t).slope, 0.5, 1e-12);
  EXPECT_NEAR(fit_loglog(t, two_thirds).slope, 2.0 / 3.0, 1e-12);
}

TEST(BoundDiagnostics, ZeroLossIsWithinAnyBound) {
  BoundInputs in;
  in.horizon = 100;
  in.m = 2;
  const BoundReport r = bound_diagnostics(0.0, in, 25, 100);
  EXPECT_TRUE(r.within_bound);
  EXPECT_GT(r.reduction_bound, 0.0);
}

TEST(ScalingSweep, OrderAndThreadCountIndependence) {
  SweepConfig c;
  c.horizons = {100, 200, 400, 800};
  c.seeds = 5;
  c.base_seed = 10;
  c.arms = {Arm::kNewton, Arm::kSpherical};
  const CellRunner runner = [](std::int64_t t, std::uint64_t seed, Arm arm) {
    SweepCell cell;
    cell.final_regret = std::sqrt(static_cast<double>(t)) * (1.0 + 0.01 * static_cast<double>(seed % 3)) *
                        (arm == Arm::kNewton ? 1.0 : 2.0);
    return cell;
  };
  const SweepResult one = scaling_sweep(c, runner);
  c.jobs = 3;
  const SweepResult three = scaling_sweep(c, runner);
  ASSERT_EQ(one.cells.size(), 40u);
  for (std::size_t i = 0; i < one.cells.size(); ++i) {
    EXPECT_EQ(one.cells[i].horizon, three.cells[i].horizon);
    EXPECT_EQ(one.cells[i].seed, three.cells[i].seed);
    EXPECT_EQ(one.cells[i].final_regret, three.cells[i].final_regret);
  }
  EXPECT_EQ(one.cells[0].arm, Arm::kNewton);
  EXPECT_EQ(one.cells[0].seed, 10u);
  EXPECT_NEAR(one.arms[0].fit.slope, 0.5, 1e-12);
}

TEST(ScalingSweep, PreconditionsAndCellErrors) {
  SweepConfig c;
  c.horizons = {100, 200, 400};
  const CellRunner ok = [](std::int64_t, std::uint64_t, Arm) { return SweepCell{}; };
  EXPECT_THROW(scaling_sweep(c, ok), ConfigError);
  c.horizons = {100, 200, 400, 800};
  c.seeds = 4;
  EXPECT_THROW(scaling_sweep(c, ok), ConfigError);
  c.seeds = 5;
  const CellRunner bad = [](std::int64_t t, std::uint64_t, Arm) -> SweepCell {
    if (t == 400) throw Error("boom");
    SweepCell cell;
    cell.final_regret = 1.0;
    return cell;
  };
  try {
    scaling_sweep(c, bad);
    FAIL() << "expected a cell error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("T=400"), std::string::npos) << e.what();
  }
}

TEST(CheckRegistry, EveryDeclaredSuiteIsRegistered) {
  EXPECT_TRUE(missing_suites().empty());
  EXPECT_EQ(check_registry().size(), declared_suites().size());
}

}  // namespace
}  // namespace bcom
