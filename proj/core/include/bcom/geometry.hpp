#pragma once

// PSD matrix calculus, sphere sampling and metric projections onto convex
// sets. Everything here is a pure function of its arguments (plus an explicit
// Rng where sampling is involved).

#include <Eigen/Core>
#include <cstdint>
#include <variant>

#include "bcom/rng.hpp"

namespace bcom {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kSemidefiniteTolerance = 1e-10;
inline constexpr double kMembershipTolerance = 1e-9;

double max_abs(const Matrix& m);

/// Symmetric positive semidefinite matrix.
///
/// Construction checks symmetry (relative to the entry scale) and
/// semidefiniteness up to numeric slack, then stores the exactly symmetrized
/// matrix. Throws NotPsdError otherwise.
class PsdMatrix {
 public:
  explicit PsdMatrix(const Matrix& m);

  static PsdMatrix identity(Index d, double scale = 1.0);
  /// Gram matrix g^T g, symmetric by construction.
  static PsdMatrix gram(const Matrix& g);

  const Matrix& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }

  /// this + scale * other; scale must be >= 0.
  PsdMatrix plus_scaled(const PsdMatrix& other, double scale) const;

 private:
  struct Trusted {};
  PsdMatrix(Matrix m, Trusted) : m_(std::move(m)) {}

  Matrix m_;
};

/// Symmetric eigendecomposition of a PsdMatrix with helpers for matrix
/// functions. Computed once, then reused for A^{1/2}, A^{-1/2}, A^{-1} and
/// projections in the A-metric.
class SpectralFactor {
 public:
  explicit SpectralFactor(const PsdMatrix& a);

  const Vector& eigenvalues() const { return values_; }
  const Matrix& eigenvectors() const { return vectors_; }
  Index dim() const { return values_.size(); }
  double min_eigenvalue() const { return values_.minCoeff(); }
  double max_eigenvalue() const { return values_.maxCoeff(); }

  /// Q diag(lambda^p) Q^T; requires lambda > 0 when p < 0.
  Matrix power(double p) const;
  Matrix sqrt() const { return power(0.5); }
  Matrix inverse() const { return power(-1.0); }
  Matrix inv_sqrt(double floor) const;

  /// A^{p} x without forming the matrix.
  Vector apply_power(double p, const Vector& x) const;

  double logdet() const;

 private:
  Vector values_;
  Matrix vectors_;
};

struct UnitSphereSample {
  Vector v;
};

UnitSphereSample sample_unit_sphere(Index d, Rng& rng);

/// B with B A B = I, computed through the eigendecomposition.
/// Throws CurvatureFloorError when lambda_min(A) < floor.
PsdMatrix inv_sqrt(const PsdMatrix& a, double floor);

/// Sum of log eigenvalues. Throws SingularMatrixError when lambda_min <= 0.
double logdet(const PsdMatrix& a);

struct EuclideanBall {
  Vector center;
  double radius = 1.0;
};

struct Box {
  Vector lower;
  Vector upper;
};

/// { M = M^[0..m-1] : sum_j ||M^[j]||_op <= radius } under the DRC embedding
/// layout: coordinate k*du*dy + i*dy + j holds M^[k]_{ij}.
struct OperatorL1Ball {
  int memory = 1;
  int du = 1;
  int dy = 1;
  double radius = 1.0;
};

class ConvexSet {
 public:
  using Shape = std::variant<EuclideanBall, Box, OperatorL1Ball>;

  explicit ConvexSet(Shape shape);

  static ConvexSet ball(Vector center, double radius);
  static ConvexSet box(Vector lower, Vector upper);
  static ConvexSet operator_l1_ball(int memory, int du, int dy, double radius);

  const Shape& shape() const { return shape_; }
  Index dimension() const;

  Vector euclidean_project(const Vector& x) const;
  bool contains(const Vector& x, double tol = kMembershipTolerance) const;

  /// Deterministic interior point used to initialise learners.
  Vector center() const;
  /// Exact Euclidean diameter.
  double diameter() const;
  /// sup over the set of ||x||_2.
  double max_norm() const;

  /// A random point of the set (not necessarily uniform for the DRC ball).
  Vector sample(Rng& rng) const;

 private:
  Shape shape_;
};

/// sum_k ||M^[k]||_op for an embedded DRC vector.
double operator_l1_norm(const Vector& x, int memory, int du, int dy);

/// argmin_{x in set} (x - p)^T A (x - p).
///
/// Balls use bisection on the KKT multiplier; other sets use accelerated
/// projected gradient on the quadratic with the set's Euclidean projector.
/// Throws InvalidMetricError if A is not positive definite and
/// ProjectionNotConvergedError if the inner solver stalls.
Vector mahalanobis_project(const ConvexSet& set, const SpectralFactor& metric, const Vector& p);
Vector mahalanobis_project(const ConvexSet& set, const PsdMatrix& metric, const Vector& p);
Vector mahalanobis_project(const ConvexSet& set, const Matrix& metric, const Vector& p);

}  // namespace bcom
