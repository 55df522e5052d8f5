#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bcom/bco.hpp"
#include "bcom/checks.hpp"
#include "bcom/errors.hpp"
#include "bcom/losses.hpp"

namespace bcom {

namespace {

struct Trajectory {
  BcomInstance inst;
  BcoParams params;
  std::vector<StepRecord> updates;
  std::vector<double> update_values;
  std::vector<double> min_increment_eig;
  int frozen_violations = 0;
  std::int64_t steps = 0;
};

// Steps the learner by hand so every intermediate state can be inspected.
Trajectory trace_run(std::uint64_t seed) {
  SyntheticBcomConfig cfg;
  cfg.d = 3;
  cfg.m = 3;
  cfg.horizon = 3000;
  cfg.seed = seed;
  Trajectory tr{make_synthetic_bcom_instance(cfg), {}, {}, {}, {}, 0, 0};
  const InstanceCertificate& cert = tr.inst.cert;
  const double eta = std::min(1.0 / std::sqrt(static_cast<double>(cfg.horizon)), 2.0 / (cfg.m * cert.alpha * cert.r_h));
  tr.params = BcoParams{eta, cfg.m, cert.alpha, 1.0};
  Rng bernoulli = make_stream(seed, Stream::kBernoulli);
  Rng sphere = make_stream(seed, Stream::kSphere);
  BcomState s = init_bcom_state(tr.inst.set, tr.params, bernoulli, sphere);
  std::vector<Vector> decisions(static_cast<std::size_t>(cfg.m), s.z);
  for (std::int64_t t = cfg.m; t <= cfg.horizon; ++t) {
    const AffineMemoryLoss& f = tr.inst.losses[static_cast<std::size_t>(t - 1)];
    const std::vector<Vector> window(decisions.end() - cfg.m, decisions.end());
    const double value = f.eval(window);
    const BcomState before = s;
    const StepRecord rec = bcoam_step(s, tr.inst.set, value, f.h_t(), tr.params, bernoulli, sphere);
    ++tr.steps;
    if (rec.updated) {
      tr.updates.push_back(rec);
      tr.update_values.push_back(value);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(s.a_hat.matrix() - before.a_hat.matrix(), Eigen::EigenvaluesOnly);
      tr.min_increment_eig.push_back(eig.eigenvalues().minCoeff());
    } else if (s.o != before.o || s.v != before.v || s.z != before.z || s.a_hat.matrix() != before.a_hat.matrix() ||
               s.g_prev != before.g_prev) {
      ++tr.frozen_violations;
    }
    decisions.push_back(s.z);
  }
  return tr;
}

CheckOutcome update_spacing(std::uint64_t seed) {
  const Trajectory tr = trace_run(seed);
  const int m = tr.params.m;
  std::int64_t min_gap = std::numeric_limits<std::int64_t>::max();
  for (std::size_t i = 1; i < tr.updates.size(); ++i) min_gap = std::min(min_gap, tr.updates[i].t - tr.updates[i - 1].t);
  const std::int64_t horizon = static_cast<std::int64_t>(tr.inst.losses.size());
  std::ostringstream os;
  os << "|S| = " << tr.updates.size() << " (limit " << horizon / m << "), min gap = " << min_gap;
  return {min_gap >= m && static_cast<std::int64_t>(tr.updates.size()) <= horizon / m, os.str()};
}

CheckOutcome metric_monotonicity(std::uint64_t seed) {
  const Trajectory tr = trace_run(seed);
  double min_inc = 0.0;
  for (double e : tr.min_increment_eig) min_inc = std::min(min_inc, e);
  double max_ratio = 1.0;
  for (const StepRecord& r : tr.updates) max_ratio = std::max(max_ratio, r.metric_ratio);
  std::ostringstream os;
  os << "min eig(A_t - A_{t-1}) = " << min_inc << ", max lambda_max(A_t A_{t-m}^{-1}) = " << max_ratio;
  return {min_inc >= -1e-10 && max_ratio <= 2.0 + 1e-9, os.str()};
}

CheckOutcome step_size_bound(std::uint64_t seed) {
  const Trajectory tr = trace_run(seed);
  const double d = static_cast<double>(tr.inst.set.dimension());
  const double bound = tr.params.eta * d * tr.inst.cert.g_f * tr.inst.cert.diameter + 1e-9;
  double worst = 0.0;
  for (const StepRecord& r : tr.updates) worst = std::max(worst, r.step_norm);
  std::ostringstream os;
  os << "max |o_{t+1} - o_t| = " << worst << " vs eta d G D = " << bound;
  return {worst <= bound, os.str()};
}

CheckOutcome dual_gradient_norm(std::uint64_t seed) {
  const Trajectory tr = trace_run(seed);
  const double d = static_cast<double>(tr.inst.set.dimension());
  const double gd = tr.inst.cert.g_f * tr.inst.cert.diameter;
  int violations = 0;
  int outside = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.updates.size(); ++i) {
    const double value = std::abs(tr.update_values[i]);
    const double norm = tr.updates[i].grad_dual_norm;
    worst = std::max(worst, norm / (d * gd));
    // The bound is stated for |f| <= G D; beyond it only the d |f| form holds.
    if (value > gd) ++outside;
    if (norm > d * std::max(gd, value) * (1.0 + 1e-12)) ++violations;
  }
  std::ostringstream os;
  os << "max |g|_{A^-1}/(d G D) = " << worst << ", steps with |f| > G D: " << outside
     << ", violations: " << violations;
  return {violations == 0, os.str()};
}

CheckOutcome frozen_state(std::uint64_t seed) {
  const Trajectory tr = trace_run(seed);
  std::ostringstream os;
  os << tr.frozen_violations << " non-update steps changed state (of "
     << tr.steps - static_cast<std::int64_t>(tr.updates.size()) << ")";
  return {tr.frozen_violations == 0, os.str()};
}

CheckOutcome decorrelation(std::uint64_t seed) {
  const Trajectory tr = trace_run(seed);
  int violations = 0;
  for (const StepRecord& r : tr.updates) {
    if (!(r.v_sampled_event > r.prev_o_fixed_event)) ++violations;
  }
  std::ostringstream os;
  os << violations << " epochs used a v drawn before the previous o was fixed";
  return {violations == 0, os.str()};
}

}  // namespace

std::vector<CheckSuite> bco_checks() {
  return {
      {"bco", "update_spacing", update_spacing},
      {"bco", "metric_monotonicity", metric_monotonicity},
      {"bco", "step_size_bound", step_size_bound},
      {"bco", "dual_gradient_norm", dual_gradient_norm},
      {"bco", "frozen_state", frozen_state},
      {"bco", "decorrelation", decorrelation},
  };
}

}  // namespace bcom
