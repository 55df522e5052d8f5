#pragma once

#include <stdexcept>
#include <string>

namespace bcom {

// Base of every error thrown by the library. Subclasses carry the category so
// callers (the CLI in particular) can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimensionError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

class NotPsdError : public Error {
 public:
  using Error::Error;
};

class InvalidMetricError : public Error {
 public:
  using Error::Error;
};

class CurvatureFloorError : public Error {
 public:
  CurvatureFloorError(double min_eigenvalue, double floor);
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

// Raised by iterative solvers; carries the last residual so a caller can judge
// how far off the iterate was.
class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& what, double residual);
  double residual() const { return residual_; }

 private:
  double residual_;
};

class ProjectionNotConvergedError : public NotConvergedError {
 public:
  using NotConvergedError::NotConvergedError;
};

class ComparatorNotConvergedError : public NotConvergedError {
 public:
  using NotConvergedError::NotConvergedError;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field_path, const std::string& message);
  const std::string& field_path() const { return field_path_; }

 private:
  std::string field_path_;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

class HistoryError : public Error {
 public:
  using Error::Error;
};

class TruncationBudgetError : public Error {
 public:
  TruncationBudgetError(double certified_bound, double budget);
  double certified_bound() const { return certified_bound_; }
  double budget() const { return budget_; }

 private:
  double certified_bound_;
  double budget_;
};

class HorizonMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace bcom
