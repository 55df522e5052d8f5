#include <algorithm>
#include <cmath>
#include <sstream>

#include "bcom/checks.hpp"
#include "bcom/harness.hpp"
#include "bcom/rng.hpp"

namespace bcom {

namespace {

BcomExperimentConfig small_experiment() {
  BcomExperimentConfig c;
  c.instance.d = 3;
  c.instance.m = 3;
  c.comparator_probes = 200;
  return c;
}

CheckOutcome determinism(std::uint64_t seed) {
  const BcomExperimentConfig cfg = small_experiment();
  const ExperimentResult a = run_bcom_experiment(cfg, 1024, seed, Arm::kNewton);
  const ExperimentResult b = run_bcom_experiment(cfg, 1024, seed, Arm::kNewton);
  const bool same = a.record.incurred == b.record.incurred && a.record.comparator == b.record.comparator &&
                    a.record.cumulative == b.record.cumulative && a.update_set == b.update_set;
  std::ostringstream os;
  os << "re-run " << (same ? "identical" : "differs") << ", final regret " << a.record.final_regret();
  return {same, os.str()};
}

CheckOutcome comparator_optimality(std::uint64_t seed) {
  const BcomExperimentConfig cfg = small_experiment();
  SyntheticBcomConfig ic = cfg.instance;
  ic.horizon = 512;
  ic.seed = seed;
  const BcomInstance inst = make_synthetic_bcom_instance(ic);
  const AffineSumObjective obj = bcom_objective(inst.losses, ic.m);
  const ComparatorResult r = best_fixed_comparator(obj, inst.set, 1e-8, 500, 1000, seed);
  std::ostringstream os;
  os << "iterations " << r.iterations << ", residual " << r.residual << ", best probe gain " << r.worst_probe_gain;
  return {r.worst_probe_gain <= 1e-8 && inst.set.contains(r.x), os.str()};
}

CheckOutcome bound_sanity(std::uint64_t seed) {
  // The update count is checked on the pooled runs; a single short run sits
  // outside its own 3 sigma band too often to be a useful gate.
  const BcomExperimentConfig cfg = small_experiment();
  const int runs = 8;
  std::int64_t updates = 0;
  std::int64_t steps = 0;
  int within = 0;
  double worst_ratio = 0.0;
  double p = 0.0;
  for (int k = 0; k < runs; ++k) {
    const ExperimentResult r = run_bcom_experiment(cfg, 2048, keyed_rng(seed, {static_cast<std::uint64_t>(k)})(), Arm::kNewton);
    within += r.bounds.within_bound ? 1 : 0;
    worst_ratio = std::max(worst_ratio, r.bounds.measured / r.bounds.reduction_bound);
    updates += r.bounds.updates;
    steps += r.bounds.steps;
    p = r.bounds.expected_frequency;
  }
  const double m = static_cast<double>(cfg.instance.m);
  const double sigma = std::sqrt((p - (2.0 * m - 1.0) * p * p) / static_cast<double>(steps));
  const double freq = static_cast<double>(updates) / static_cast<double>(steps);
  const bool freq_ok = std::abs(freq - p) <= 3.0 * sigma + runs / static_cast<double>(steps);
  std::ostringstream os;
  os << within << "/" << runs << " runs within bound (max regret/bound " << worst_ratio << "), pooled update frequency "
     << freq << " vs " << p << " +- 3*" << sigma;
  return {within == runs && freq_ok, os.str()};
}

CheckOutcome paired_streams(std::uint64_t seed) {
  const BcomExperimentConfig cfg = small_experiment();
  const ExperimentResult newton = run_bcom_experiment(cfg, 1024, seed, Arm::kNewton);
  const ExperimentResult spherical = run_bcom_experiment(cfg, 1024, seed, Arm::kSpherical);
  const bool same_schedule = newton.update_set == spherical.update_set;
  const bool same_comparator = newton.record.comparator == spherical.record.comparator;
  std::ostringstream os;
  os << "update sets " << (same_schedule ? "match" : "differ") << ", comparator losses "
     << (same_comparator ? "match" : "differ");
  return {same_schedule && same_comparator, os.str()};
}

}  // namespace

std::vector<CheckSuite> harness_checks() {
  return {
      {"harness", "determinism", determinism},
      {"harness", "comparator_optimality", comparator_optimality},
      {"harness", "bound_sanity", bound_sanity},
      {"harness", "paired_streams", paired_streams},
  };
}

}  // namespace bcom
