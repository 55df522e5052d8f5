#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "bcom/geometry.hpp"
#include "bcom/losses.hpp"

namespace bcom {

struct BcoParams {
  double eta = 0.0;
  int m = 1;
  double alpha = 1.0;
  // Initial metric is a_init_scale * I.
  double a_init_scale = 1.0;
};

struct DelayParams {
  double eta = 0.0;
  int d0 = 1;
  double alpha = 1.0;
  double a_init_scale = 1.0;
};

// Learner state of the occasional-update Newton method. Between updates every
// field except t and the Bernoulli run counter is left untouched.
struct BcomState {
  std::int64_t t = 1;
  Vector o;
  PsdMatrix a_hat = PsdMatrix::identity(0);
  SpectralFactor a_factor{PsdMatrix::identity(0)};
  Matrix a_inv_sqrt;
  Vector v;
  Vector z;
  // Gradient estimate of the previous update epoch (zero before the first).
  Vector g_prev;
  double logdet_a = 0.0;
  int epoch = 0;
  // Consecutive zero Bernoulli draws immediately before t, capped at m.
  int zeros_run = 0;
  // Event counter used to audit sampling order.
  std::uint64_t events = 0;
  std::uint64_t o_fixed_event = 0;
  std::uint64_t v_sampled_event = 0;
};

struct StepRecord {
  std::int64_t t = 0;
  bool updated = false;
  double step_norm = 0.0;
  double logdet_a = 0.0;
  // ||g_t||_{A_t^{-1}} for the estimate created at this step.
  double grad_dual_norm = 0.0;
  // lambda_max(A_t A_{t-1}^{-1}); 1 when nothing changed.
  double metric_ratio = 1.0;
  // Event ids: when the o used at this epoch was fixed, and when the v used
  // at this epoch was drawn.
  std::uint64_t prev_o_fixed_event = 0;
  std::uint64_t v_sampled_event = 0;
};

// Initial state at t = 1: o = centre of the set, A = scale * I, one shared
// sphere draw for the first m plays, and b_1..b_{m-1} folded into zeros_run.
BcomState init_bcom_state(const ConvexSet& set, const BcoParams& params, Rng& bernoulli, Rng& sphere);

bool draw_bernoulli(Rng& bernoulli, int m);

// One step of the occasional-update method with the Bernoulli draw supplied.
StepRecord bcoam_step(BcomState& state, const ConvexSet& set, double f_value, const PsdMatrix& h,
                      const BcoParams& params, bool b_t, Rng& sphere);
StepRecord bcoam_step(BcomState& state, const ConvexSet& set, double f_value, const PsdMatrix& h,
                      const BcoParams& params, Rng& bernoulli, Rng& sphere);

// State of the every-step method with delay d0.
struct DelayState {
  std::int64_t t = 1;
  Vector o;
  PsdMatrix a_hat = PsdMatrix::identity(0);
  SpectralFactor a_factor{PsdMatrix::identity(0)};
  Vector v;
  Vector z;
  Vector last_gradient;
  // (A_s, g_s) for the last d0 steps, oldest first.
  std::deque<std::pair<SpectralFactor, Vector>> history;
};

DelayState init_delay_state(const ConvexSet& set, const DelayParams& params, Rng& sphere);
StepRecord bco_delay_step(DelayState& state, const ConvexSet& set, double f_value, const PsdMatrix& h,
                          const DelayParams& params, Rng& sphere);

struct UpdateTrace {
  std::vector<std::int64_t> update_set;
  std::vector<StepRecord> records;
};

struct BcoRun {
  // decisions[t-1] = z_t, t = 1..T.
  std::vector<Vector> decisions;
  // incurred[k] = f_{t0+k}(z_{t0-m+1..t0+k}), t0 = m.
  std::vector<double> incurred;
  std::vector<double> o_norm;
  std::vector<double> logdet;
  std::vector<bool> updated;
  UpdateTrace trace;
  int first_t = 1;
};

struct RunParams {
  double eta = 0.0;
  int m = 1;
  double alpha = 1.0;
  double a_init_scale = 1.0;
  std::uint64_t seed = 0;
};

// Runs the full loop over losses[t-1], t = 1..T.
BcoRun run_bcoam(const std::vector<AffineMemoryLoss>& losses, const ConvexSet& set, const RunParams& params);

struct SphericalParams {
  double eta = 0.0;
  double delta = 1.0;
  int m = 1;
  std::uint64_t seed = 0;
};

// First-order baseline with a fixed isotropic sampling radius delta and the
// same Bernoulli scheduling stream as run_bcoam.
BcoRun run_spherical_baseline(const std::vector<AffineMemoryLoss>& losses, const ConvexSet& set,
                              const SphericalParams& params);

struct UnaryFunction {
  std::function<double(const Vector&)> eval;
  std::function<Vector(const Vector&)> grad;
};

struct EstimatorReport {
  Vector empirical_mean;
  Vector empirical_se;
  Vector smoothed_gradient;
  Vector smoothed_se;
  double gap_smoothed = 0.0;
  // Largest per-coordinate |empirical - smoothed| / combined standard error.
  double z_smoothed = 0.0;
  Vector exact_gradient;
  double gap_exact = 0.0;
  double z_exact = 0.0;
};

// Compares the one-point estimator d f(o + A^{-1/2} v) A^{1/2} v against the
// gradient of the ellipsoidal smoothing (Monte Carlo with N ball samples)
// and the exact gradient at o.
EstimatorReport estimator_mean_check(const UnaryFunction& f, const Vector& o, const PsdMatrix& a, int n_samples,
                                     Rng& rng);

}  // namespace bcom
