#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bcom/bco.hpp"
#include "bcom/control.hpp"
#include "bcom/losses.hpp"

namespace bcom {

// F(x) = sum_k l_k(offsets[k] + maps[k] x). Both comparator problems (unary
// BCO-M losses, fixed-DRC control cost) have this shape.
struct AffineSumObjective {
  std::vector<BaseLoss> losses;
  std::vector<Vector> offsets;
  std::vector<Matrix> maps;

  std::size_t size() const { return losses.size(); }
  Index dim() const { return maps.empty() ? 0 : maps[0].cols(); }
  double term(std::size_t k, const Vector& x) const;
  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Matrix hessian(const Vector& x) const;
  // Per-term values at x.
  std::vector<double> terms(const Vector& x) const;
};

// Unary forms f_t(z, ..., z) for t = first_t..T.
AffineSumObjective bcom_objective(const std::vector<AffineMemoryLoss>& losses, int first_t);
// Total cost of the fixed DRC policy as an affine function of e(M), exact (no
// Markov truncation).
AffineSumObjective control_objective(const StabilizableSystem& sys, const CostSchedule& costs,
                                     const NoiseSchedule& noise, int m, std::int64_t horizon);

struct ComparatorResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  // Norm of the gradient mapping of the averaged objective at exit.
  double residual = 0.0;
  // Largest improvement any random probe found over x (<= tol on success).
  double worst_probe_gain = 0.0;
};

// Projected Newton (Hessian-metric projection, Armijo backtracking) on the
// averaged objective. Throws ComparatorNotConvergedError on iteration exhaustion or a probe that
// beats the result by more than tol.
ComparatorResult best_fixed_comparator(const AffineSumObjective& objective, const ConvexSet& set, double tol = 1e-8,
                                       int max_iterations = 500, int probes = 1000, std::uint64_t probe_seed = 0);

struct RegretRecord {
  int first_t = 1;
  std::vector<double> incurred;
  std::vector<double> comparator;
  std::vector<double> cumulative;
  double comparator_value = 0.0;
  std::string comparator_label;
  std::string config_hash;
  std::uint64_t seed = 0;
  double wall_clock_seconds = 0.0;
  InstanceCertificate cert;

  double final_regret() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

// Prefix sums of incurred - comparator. Throws HorizonMismatchError when the
// series differ in length.
RegretRecord compute_regret(const std::vector<double>& incurred, const std::vector<double>& comparator, int first_t);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> residuals;
};

// Least squares of log y on log x with a Student-t interval on the slope.
// Throws Error on non-positive inputs or fewer than two points.
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, double confidence = 0.95);

struct BoundInputs {
  double alpha = 1.0;
  double beta = 1.0;
  double g = 1.0;
  double diameter = 1.0;
  double r_h = 1.0;
  double eta = 1.0;
  int d = 1;
  int m = 1;
  std::int64_t horizon = 1;
  // Finite-horizon proxy for the convolution modulus.
  double modulus = 1.0;
};

// (2 beta d/(eta alpha)) log(eta R_H T + 1) + 2 d0 G D + D^2 d0 R_H/(2 eta) + 3 eta d0 d^2 G^2 D^2 R_H T
double base_regret_bound(double beta, int d, double eta, double alpha, double r_h, double horizon, int d0, double g,
                         double diameter);
double moving_cost_bound(const BoundInputs& in);

struct BoundReport {
  double measured = 0.0;
  // 3 m R_base(T/m) with d0 = 2.
  double reduction_bound = 0.0;
  double moving_cost = 0.0;
  double full_bound = 0.0;
  bool within_bound = true;
  std::int64_t updates = 0;
  std::int64_t steps = 0;
  double frequency = 0.0;
  double expected_frequency = 0.0;
  double frequency_sigma = 0.0;
  bool frequency_within_3sigma = true;
};

BoundReport bound_diagnostics(double measured, const BoundInputs& in, std::int64_t updates, std::int64_t steps);

enum class Arm { kNewton, kSpherical };
std::string to_string(Arm arm);
Arm arm_from_string(const std::string& name);

struct TraceRow {
  std::int64_t t = 0;
  double loss = 0.0;
  double comparator_loss = 0.0;
  double cum_regret = 0.0;
  bool updated = false;
  double logdet = 0.0;
};

struct BcomExperimentConfig {
  SyntheticBcomConfig instance;
  double c_eta = 1.0;
  double a_init_scale = 1.0;
  // Spherical arm: delta = min(1, c_delta T^{-1/6}), eta = c_eta_spherical T^{-2/3}.
  double c_delta = 1.0;
  double c_eta_spherical = 1.0;
  double comparator_tol = 1e-8;
  int comparator_probes = 1000;
};

struct ControlExperimentConfig {
  SystemConfig system;
  CostSchedule costs;
  NoiseSchedule noise;
  // Non-positive means default_memory(gamma, T).
  int m = 0;
  double r_m = 1.0;
  double c_eta = 1.0;
  double a_init_scale = 0.0;
  DecisionSetKind set_kind = DecisionSetKind::kOperatorL1;
  double comparator_tol = 1e-8;
  int comparator_probes = 1000;
  int kappa_probes = 0;
  int kappa_stride = 1;
};

struct ExperimentResult {
  RegretRecord record;
  BoundReport bounds;
  std::vector<TraceRow> trace;
  ComparatorResult comparator;
  std::vector<std::int64_t> update_set;
  double eta = 0.0;
  int m = 1;
  int d = 1;
  // Control runs only.
  std::optional<ControlRun> control;
  ReductionConstants reduction;
};

ExperimentResult run_bcom_experiment(const BcomExperimentConfig& config, std::int64_t horizon, std::uint64_t seed,
                                     Arm arm);
ExperimentResult run_control_experiment(const ControlExperimentConfig& config, std::int64_t horizon,
                                        std::uint64_t seed);

struct SweepCell {
  std::int64_t horizon = 0;
  std::uint64_t seed = 0;
  Arm arm = Arm::kNewton;
  double final_regret = 0.0;
  BoundReport bounds;
  double cumulative_discrepancy = 0.0;
  double discrepancy_slack = 0.0;
};

struct ArmSummary {
  Arm arm = Arm::kNewton;
  std::vector<double> horizons;
  std::vector<double> mean;
  std::vector<double> standard_error;
  LogLogFit fit;
};

struct SweepConfig {
  std::vector<std::int64_t> horizons;
  int seeds = 5;
  std::uint64_t base_seed = 0;
  std::vector<Arm> arms{Arm::kNewton};
  int jobs = 1;
};

struct SweepResult {
  // Ordered by (arm, T, seed) regardless of execution order.
  std::vector<SweepCell> cells;
  std::vector<ArmSummary> arms;
};

using CellRunner = std::function<SweepCell(std::int64_t horizon, std::uint64_t seed, Arm arm)>;

// Runs every (arm, T, seed) cell, on up to config.jobs threads, then fits the
// per-arm log-log slope of mean final regret. A failing cell aborts the sweep
// with an Error naming the cell.
SweepResult scaling_sweep(const SweepConfig& config, const CellRunner& runner);

}  // namespace bcom
