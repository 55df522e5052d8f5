#include "bcom/checks.hpp"

#include <algorithm>
#include <chrono>
#include <exception>

namespace bcom {

const std::vector<std::pair<std::string, std::string>>& declared_suites() {
  static const std::vector<std::pair<std::string, std::string>> suites = {
      {"geometry", "projection_variational_inequality"},
      {"geometry", "projection_identity_metric"},
      {"geometry", "sphere_second_moment"},
      {"geometry", "inv_sqrt_commutes"},
      {"losses", "gradient_finite_difference"},
      {"losses", "unary_consistency"},
      {"losses", "gradient_bound"},
      {"losses", "kappa_sandwich"},
      {"losses", "oblivious_adversary"},
      {"bco", "update_spacing"},
      {"bco", "metric_monotonicity"},
      {"bco", "step_size_bound"},
      {"bco", "dual_gradient_norm"},
      {"bco", "frozen_state"},
      {"bco", "decorrelation"},
      {"control", "markov_decay"},
      {"control", "signal_reconstruction"},
      {"control", "embedding_identity"},
      {"control", "reduction_fidelity"},
      {"control", "state_boundedness"},
      {"control", "reduced_kappa_sandwich"},
      {"harness", "determinism"},
      {"harness", "comparator_optimality"},
      {"harness", "bound_sanity"},
      {"harness", "paired_streams"},
  };
  return suites;
}

std::vector<CheckSuite> check_registry() {
  std::vector<CheckSuite> all;
  for (auto&& part : {geometry_checks(), losses_checks(), bco_checks(), control_checks(), harness_checks()}) {
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

std::vector<std::string> missing_suites() {
  const std::vector<CheckSuite> reg = check_registry();
  std::vector<std::string> missing;
  for (const auto& [module, name] : declared_suites()) {
    const bool found = std::any_of(reg.begin(), reg.end(),
                                   [&](const CheckSuite& s) { return s.module == module && s.name == name; });
    if (!found) missing.push_back(module + "/" + name);
  }
  return missing;
}

std::vector<CheckResult> run_checks(std::uint64_t seed) {
  std::vector<CheckResult> out;
  for (const CheckSuite& suite : check_registry()) {
    CheckResult r;
    r.module = suite.module;
    r.name = suite.name;
    const auto start = std::chrono::steady_clock::now();
    try {
      const CheckOutcome o = suite.run(seed);
      r.passed = o.passed;
      r.detail = o.detail;
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(std::move(r));
  }
  for (const std::string& id : missing_suites()) {
    const auto slash = id.find('/');
    out.push_back({id.substr(0, slash), id.substr(slash + 1), false, "declared but not registered", 0.0});
  }
  return out;
}

}  // namespace bcom
