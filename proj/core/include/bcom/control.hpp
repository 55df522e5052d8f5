#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bcom/adversary.hpp"
#include "bcom/bco.hpp"
#include "bcom/geometry.hpp"
#include "bcom/losses.hpp"

namespace bcom {

// x_{t+1} = A x_t + B u_t + w_t,  y_t = C x_t + e_t
struct LdsInstance {
  Matrix a;
  Matrix b;
  Matrix c;
  Vector x1;
  double kappa_sys = 1.0;

  Index dx() const { return a.rows(); }
  Index du() const { return b.cols(); }
  Index dy() const { return c.rows(); }
};

// K with A + B K C = H L H^{-1}, ||L|| <= 1 - gamma, max(||K||, ||H||, ||H^{-1}||) <= kappa.
struct StabilizingController {
  Matrix k;
  Matrix h;
  Matrix l;
  double kappa = 1.0;
  double gamma = 1.0;
};

struct StabilizableSystem {
  LdsInstance instance;
  StabilizingController controller;
};

struct SystemConfig {
  int dx = 2;
  int du = 1;
  int dy = 1;
  double kappa = 2.0;
  double gamma = 0.5;
  double kappa_sys = 2.0;
  std::uint64_t seed = 0;
};

// Random certified system. H is drawn with singular values in
// [1, min(kappa, sqrt(dx))]. Throws ConfigError on bad parameters and
// ConstructionError if ||A|| <= kappa_sys cannot be met.
StabilizableSystem make_stabilizable_system(const SystemConfig& config);

// A = H L H^{-1} - B K C from explicit parts; verified before returning.
StabilizableSystem system_from_parts(const Matrix& h, const Matrix& l, const Matrix& k, const Matrix& b,
                                     const Matrix& c, double kappa, double gamma, double kappa_sys);

// Throws ConstructionError naming the first violated certificate inequality.
void verify_system(const StabilizableSystem& sys);

Vector lds_step(const LdsInstance& inst, const Vector& x, const Vector& u, const Vector& w);
Vector observe(const LdsInstance& inst, const Vector& x, const Vector& e);

double closed_loop_constant(const StabilizableSystem& sys);
// Certified bound on ||G^[i]||_op, i >= 1.
double markov_decay_bound(const StabilizableSystem& sys, int i);
// Certified bound on sum_{i > n} ||G^[i]||_op.
double markov_tail_bound(const StabilizableSystem& sys, int n);
// Smallest N with markov_tail_bound(N) < min(1e-10, 1/T^2).
int truncation_length(const StabilizableSystem& sys, std::int64_t horizon);
// ceil(log T / log(1/(1-gamma))), at least 1.
int default_memory(double gamma, std::int64_t horizon);

// G^[0] = [0; I], G^[i] = [C; KC] (A+BKC)^{i-1} B for i = 1..truncation.
struct MarkovOperator {
  std::vector<Matrix> blocks;
  int truncation = 0;
  Index dy = 0;
  Index du = 0;
};

MarkovOperator markov_operator(const StabilizableSystem& sys, int truncation);
// First m blocks, shared by every reduced loss of a run.
BlockList memory_blocks(const MarkovOperator& markov, int m);

struct DrcPolicy {
  std::vector<Matrix> blocks;  // M^[0..m-1], each du x dy
  int memory() const { return static_cast<int>(blocks.size()); }
};

// e(M)[k*du*dy + i*dy + j] = M^[k]_{ij}
Vector embed(const DrcPolicy& policy);
DrcPolicy unembed(const Vector& x, int m, Index du, Index dy);
// window is oldest first (window[m-1-k] = y_{t-k}); returns the du x (m*du*dy)
// matrix Y with Y e(M) = sum_k M^[k] y_{t-k}.
Matrix embed_signals(const std::vector<Vector>& window, Index du);

// Online form of the counterfactual recursion
//   y_t(K) = y_t - sum_{i=1}^{min(t-1, N)} G_y^[i] a_{t-i},
// a_s being the DRC correction applied at time s.
class SignalReconstructor {
 public:
  explicit SignalReconstructor(const MarkovOperator& markov);

  // Returns y_t(K) for the next time index.
  Vector push_observation(const Vector& y);
  // Correction a_t applied at the time of the latest observation.
  void push_correction(const Vector& a);

  const std::vector<Vector>& signals() const { return signals_; }

 private:
  const MarkovOperator* markov_;
  std::vector<Vector> signals_;
  std::vector<Vector> corrections_;
};

// Batch form. policies[s-1] = M_s; needs policies.size() >= observations.size() - 1.
std::vector<Vector> counterfactual_signals(const std::vector<Vector>& observations,
                                           const std::vector<DrcPolicy>& policies, const MarkovOperator& markov);

// Time-varying cost c_t over R^{dy+du}, minimised at the origin so that
// ||grad c_t(v)|| <= beta ||v||.
struct CostSchedule {
  BaseKind kind = BaseKind::kQuadratic;
  double alpha = 1.0;
  double beta = 1.0;
  AdversarySchedule modulation;
  Index dim = 2;

  BaseLoss at(std::int64_t t) const;
  double g_c() const { return beta; }
};

struct NoiseSchedule {
  AdversarySchedule w;
  AdversarySchedule e;

  Vector w_at(std::int64_t t, Index dx) const;
  Vector e_at(std::int64_t t, Index dy) const;
  double radius() const;
};

struct ReductionConstants {
  double diameter = 0.0;
  double g_f = 0.0;
  // Radius of (y_t, u_t) under play in M(m, 2 R_M), as printed.
  double radius = 0.0;
  // Same with the B K e_t contribution to y_t(K) included.
  double radius_full = 0.0;
  double signal_radius = 0.0;
  double signal_radius_full = 0.0;
  // Allowed cumulative |c_t - f_t| over the run.
  double cumulative_slack = 0.0;
};

ReductionConstants reduction_constants(const StabilizableSystem& sys, int m, double r_m, double g_c,
                                       double noise_radius);

struct ReductionInput {
  // signals[s-1] = y_s(K), s = 1..t.
  const std::vector<Vector>* signals = nullptr;
  BlockList blocks;
  const Matrix* k = nullptr;
  std::int64_t t = 1;
  int m = 1;
  // Refuse memories whose certified per-step truncation error exceeds this.
  std::optional<double> discrepancy_budget;
  double certified_truncation = 0.0;
};

AffineMemoryLoss reduce_to_bcom(const ReductionInput& input, const BaseLoss& cost);

// Per-step certified bound on |c_t(y_t, u_t) - f_t(window)|.
double certified_truncation_error(const StabilizableSystem& sys, int m, double r_m, double g_c, double noise_radius);

enum class DecisionSetKind { kOperatorL1, kEuclideanBall };

struct ControlParams {
  int m = 1;
  double r_m = 1.0;
  double eta = 0.0;
  std::int64_t horizon = 1;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  // Initial learner metric scale; non-positive means m.
  double a_init_scale = 0.0;
  DecisionSetKind set_kind = DecisionSetKind::kOperatorL1;
  // Markov truncation; non-positive means truncation_length(sys, horizon).
  int truncation = 0;
  std::optional<double> discrepancy_budget;
};

struct ControlRun {
  std::vector<Vector> y;
  std::vector<Vector> u;
  std::vector<double> cost;
  std::vector<bool> updated;
  std::vector<double> logdet;
  // |c_t(y_t, u_t) - f_t(played window)| for t >= m.
  std::vector<double> discrepancy;
  std::vector<Vector> played;
  std::vector<Vector> signals;
  std::vector<std::int64_t> update_set;
  std::vector<StepRecord> records;
  double cumulative_discrepancy = 0.0;
  double max_bias_proxy = 0.0;
  double max_played_norm = 0.0;  // max_t ||M_t||_{l1,op}
  double max_yu_norm = 0.0;
  // max_t max(1, ||G_t||, ||Y_t||, ||H_t||) over the reduced losses.
  double r_h = 1.0;
  int truncation = 0;
  double tail_bound = 0.0;
  int kappa_checks_failed = 0;
};

// Learner plays M_t = 0 for t < m and its own decision from t = m on.
// When kappa_probes > 0, every kappa_stride-th reduced loss is checked with
// verify_kappa_convexity.
ControlRun run_control(const StabilizableSystem& sys, const CostSchedule& costs, const NoiseSchedule& noise,
                       const ControlParams& params, int kappa_probes = 0, int kappa_stride = 1);

// y_t(K) for t = 1..T under u = K y with the given noise.
std::vector<Vector> simulate_pure_k(const StabilizableSystem& sys, const NoiseSchedule& noise, std::int64_t horizon);

// Per-step costs of the fixed DRC policy M, re-simulated from scratch.
std::vector<double> comparator_costs(const StabilizableSystem& sys, const CostSchedule& costs,
                                     const NoiseSchedule& noise, const DrcPolicy& policy, std::int64_t horizon);
double comparator_cost(const StabilizableSystem& sys, const CostSchedule& costs, const NoiseSchedule& noise,
                       const DrcPolicy& policy, std::int64_t horizon);

struct ReconstructionOracle {
  double max_gap = 0.0;
  int truncation = 0;
  double tail_bound = 0.0;
};

// Plays a fresh random M_t in M(m, r_m) every step, reconstructs y_t(K) online
// and compares against simulate_pure_k on the same noise.
ReconstructionOracle reconstruction_oracle(const StabilizableSystem& sys, const NoiseSchedule& noise,
                                           std::int64_t horizon, int m, double r_m, std::uint64_t seed);

}  // namespace bcom
