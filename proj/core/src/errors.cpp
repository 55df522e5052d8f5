#include "bcom/errors.hpp"

#include <sstream>

namespace bcom {

namespace {

std::string describe(const std::string& prefix, double a, const std::string& infix, double b) {
  std::ostringstream os;
  os.precision(17);
  os << prefix << a << infix << b;
  return os.str();
}

}  // namespace

CurvatureFloorError::CurvatureFloorError(double min_eigenvalue, double floor)
    : Error(describe("curvature floor violated: min eigenvalue ", min_eigenvalue, " < floor ", floor)),
      min_eigenvalue_(min_eigenvalue) {}

NotConvergedError::NotConvergedError(const std::string& what, double residual)
    : Error([&] {
        std::ostringstream os;
        os.precision(17);
        os << what << " (residual " << residual << ")";
        return os.str();
      }()),
      residual_(residual) {}

ConfigError::ConfigError(std::string field_path, const std::string& message)
    : Error(field_path + ": " + message), field_path_(std::move(field_path)) {}

TruncationBudgetError::TruncationBudgetError(double certified_bound, double budget)
    : Error(describe("memory too short: certified per-step truncation bound ", certified_bound,
                     " exceeds budget ", budget)),
      certified_bound_(certified_bound),
      budget_(budget) {}

}  // namespace bcom
