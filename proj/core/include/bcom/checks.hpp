#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace bcom {

struct CheckOutcome {
  bool passed = true;
  std::string detail;
};

struct CheckSuite {
  std::string module;
  std::string name;
  std::function<CheckOutcome(std::uint64_t seed)> run;
};

struct CheckResult {
  std::string module;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Every (module, suite) pair that `check` must cover.
const std::vector<std::pair<std::string, std::string>>& declared_suites();

// All registered suites, in declaration order.
std::vector<CheckSuite> check_registry();

// Declared suites without a registered implementation, as "module/name".
std::vector<std::string> missing_suites();

// Runs every registered suite. An exception inside a suite counts as a
// failure carrying the message. A declared but unregistered suite is reported
// as a failing row.
std::vector<CheckResult> run_checks(std::uint64_t seed);

std::vector<CheckSuite> geometry_checks();
std::vector<CheckSuite> losses_checks();
std::vector<CheckSuite> bco_checks();
std::vector<CheckSuite> control_checks();
std::vector<CheckSuite> harness_checks();

}  // namespace bcom
