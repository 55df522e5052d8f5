#include <Eigen/SVD>
#include <cmath>
#include <random>
#include <sstream>

#include "bcom/checks.hpp"
#include "bcom/control.hpp"

namespace bcom {

namespace {

double op_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

NoiseSchedule bounded_noise(std::uint64_t seed, double radius) {
  NoiseSchedule n;
  n.w.radius = radius;
  n.e.radius = radius;
  n.w.seed = keyed_rng(seed, {401})();
  n.e.seed = keyed_rng(seed, {402})();
  return n;
}

CostSchedule quadratic_costs(std::uint64_t seed, Index dim) {
  CostSchedule c;
  c.alpha = 0.5;
  c.beta = 2.0;
  c.dim = dim;
  c.modulation.seed = keyed_rng(seed, {403})();
  return c;
}

CheckOutcome markov_decay(std::uint64_t seed) {
  int violations = 0;
  double worst = 0.0;
  const std::vector<SystemConfig> configs = {
      {2, 1, 1, 2.0, 0.5, 2.0, seed},
      {3, 2, 2, 3.0, 0.3, 2.0, seed + 1},
      {4, 2, 3, 2.0, 0.2, 1.5, seed + 2},
  };
  for (const SystemConfig& cfg : configs) {
    const StabilizableSystem sys = make_stabilizable_system(cfg);
    const MarkovOperator op = markov_operator(sys, truncation_length(sys, 1000));
    for (int i = 1; i <= op.truncation; ++i) {
      const double ratio = op_norm(op.blocks[static_cast<std::size_t>(i)]) / markov_decay_bound(sys, i);
      worst = std::max(worst, ratio);
      if (ratio > 1.0 + 1e-12) ++violations;
    }
  }
  std::ostringstream os;
  os << "max ||G^[i]|| / bound = " << worst << ", violations = " << violations;
  return {violations == 0, os.str()};
}

CheckOutcome signal_reconstruction(std::uint64_t seed) {
  const StabilizableSystem sys = make_stabilizable_system({3, 2, 2, 3.0, 0.3, 2.0, seed});
  const ReconstructionOracle r = reconstruction_oracle(sys, bounded_noise(seed, 1.0), 500, 4, 1.0, seed);
  std::ostringstream os;
  os << "max |y_t(K) reconstructed - resimulated| = " << r.max_gap << ", truncation " << r.truncation << " (tail "
     << r.tail_bound << ")";
  return {r.max_gap <= 1e-8 && r.tail_bound < 1e-10, os.str()};
}

CheckOutcome embedding_identity(std::uint64_t seed) {
  Rng rng = keyed_rng(seed, {404});
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + trial % 5;
    const Index du = 1 + trial % 3;
    const Index dy = 1 + (trial / 3) % 3;
    DrcPolicy p;
    std::vector<Vector> window;
    for (int k = 0; k < m; ++k) {
      Matrix b(du, dy);
      for (Index j = 0; j < dy; ++j)
        for (Index i = 0; i < du; ++i) b(i, j) = normal(rng);
      p.blocks.push_back(b);
      Vector y(dy);
      for (Index i = 0; i < dy; ++i) y(i) = normal(rng);
      window.push_back(y);
    }
    Vector direct = Vector::Zero(du);
    for (int k = 0; k < m; ++k) direct += p.blocks[static_cast<std::size_t>(k)] * window[static_cast<std::size_t>(m - 1 - k)];
    worst = std::max(worst, (embed_signals(window, du) * embed(p) - direct).norm());
  }
  std::ostringstream os;
  os << "max |e_y(window) e(M) - sum M^[k] y_{t-k}| = " << worst;
  return {worst <= 1e-12, os.str()};
}

ControlParams short_run_params(std::uint64_t seed, int m) {
  ControlParams p;
  p.m = m;
  p.horizon = 2000;
  p.eta = 1.0 / std::sqrt(2000.0);
  p.alpha = 0.5;
  p.seed = seed;
  return p;
}

CheckOutcome reduction_fidelity(std::uint64_t seed) {
  const StabilizableSystem sys = make_stabilizable_system({2, 1, 1, 2.0, 0.5, 2.0, seed});
  const NoiseSchedule noise = bounded_noise(seed, 0.5);
  const CostSchedule costs = quadratic_costs(seed, 2);
  const int m = default_memory(0.5, 2000);
  const ControlRun run = run_control(sys, costs, noise, short_run_params(seed, m));
  const double per_step = certified_truncation_error(sys, m, 1.0, costs.g_c(), noise.radius());
  const double slack = reduction_constants(sys, m, 1.0, costs.g_c(), noise.radius()).cumulative_slack;
  double worst = 0.0;
  for (double d : run.discrepancy) worst = std::max(worst, d);
  std::ostringstream os;
  os << "max |c_t - f_t| = " << worst << " (certified " << per_step << "), sum = " << run.cumulative_discrepancy
     << " (slack " << slack << ")";
  return {worst <= per_step + 1e-12 && run.cumulative_discrepancy <= slack, os.str()};
}

CheckOutcome state_boundedness(std::uint64_t seed) {
  const StabilizableSystem sys = make_stabilizable_system({2, 1, 1, 2.0, 0.5, 2.0, seed});
  const NoiseSchedule noise = bounded_noise(seed, 0.5);
  const CostSchedule costs = quadratic_costs(seed, 2);
  const int m = default_memory(0.5, 2000);
  const ControlRun run = run_control(sys, costs, noise, short_run_params(seed, m));
  const ReductionConstants rc = reduction_constants(sys, m, 1.0, costs.g_c(), noise.radius());
  std::ostringstream os;
  os << "max |(y,u)| = " << run.max_yu_norm << " (R = " << rc.radius_full << ", printed " << rc.radius
     << "), max ||M_t||_{l1,op} = " << run.max_played_norm << " (limit 2 R_M = 2)";
  return {run.max_yu_norm <= rc.radius_full && run.max_played_norm <= 2.0 + 1e-9, os.str()};
}

CheckOutcome reduced_kappa(std::uint64_t seed) {
  const StabilizableSystem sys = make_stabilizable_system({2, 1, 1, 2.0, 0.5, 2.0, seed});
  const NoiseSchedule noise = bounded_noise(seed, 0.5);
  int failed = 0;
  int checked = 0;
  for (BaseKind kind : {BaseKind::kQuadratic, BaseKind::kPseudoHuber}) {
    CostSchedule costs = quadratic_costs(seed, 2);
    costs.kind = kind;
    ControlParams p = short_run_params(seed, 4);
    p.horizon = 400;
    const ControlRun run = run_control(sys, costs, noise, p, 10, 20);
    failed += run.kappa_checks_failed;
    checked += static_cast<int>((p.horizon - p.m) / 20 + 1);
  }
  std::ostringstream os;
  os << failed << "/" << checked << " reduced losses failed the sandwich";
  return {failed == 0, os.str()};
}

}  // namespace

std::vector<CheckSuite> control_checks() {
  return {
      {"control", "markov_decay", markov_decay},
      {"control", "signal_reconstruction", signal_reconstruction},
      {"control", "embedding_identity", embedding_identity},
      {"control", "reduction_fidelity", reduction_fidelity},
      {"control", "state_boundedness", state_boundedness},
      {"control", "reduced_kappa_sandwich", reduced_kappa},
  };
}

}  // namespace bcom
