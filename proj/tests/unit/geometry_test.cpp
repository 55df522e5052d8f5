#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <numbers>

#include "bcom/errors.hpp"
#include "bcom/geometry.hpp"

namespace bcom {
namespace {

Matrix rotation(double degrees) {
  const double r = degrees * std::numbers::pi / 180.0;
  Matrix q(2, 2);
  q << std::cos(r), -std::sin(r), std::sin(r), std::cos(r);
  return q;
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

TEST(SampleUnitSphere, OneDimensionalDrawIsPlusOrMinusOne) {
  Rng rng = make_stream(3, Stream::kSphere);
  for (int k = 0; k < 20; ++k) {
    const double v = sample_unit_sphere(1, rng).v(0);
    EXPECT_EQ(std::abs(v), 1.0);
  }
}

TEST(SampleUnitSphere, ThreeDimensionalMoments) {
  Rng rng = make_stream(11, Stream::kSphere);
  const int n = 1000000;
  Vector mean = Vector::Zero(3);
  Matrix second = Matrix::Zero(3, 3);
  for (int k = 0; k < n; ++k) {
    const Vector v = sample_unit_sphere(3, rng).v;
    mean += v;
    second += v * v.transpose();
  }
  mean /= n;
  second /= n;
  EXPECT_LE(mean.cwiseAbs().maxCoeff(), 4.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_LE((second - Matrix::Identity(3, 3) / 3.0).cwiseAbs().maxCoeff(), 0.005);
}

TEST(SampleUnitSphere, SameStateGivesSameVector) {
  Rng a = make_stream(5, Stream::kSphere);
  Rng b = a;
  EXPECT_EQ(sample_unit_sphere(2, a).v, sample_unit_sphere(2, b).v);
}

TEST(SampleUnitSphere, ZeroDimensionThrows) {
  Rng rng(1);
  EXPECT_THROW(sample_unit_sphere(0, rng), InvalidDimensionError);
}

TEST(InvSqrt, DiagonalClosedForms) {
  EXPECT_TRUE(inv_sqrt(PsdMatrix::identity(2, 4.0), 0.0).matrix().isApprox(0.5 * Matrix::Identity(2, 2), 1e-14));
  Matrix a = Vector(vec({1.0, 9.0})).asDiagonal();
  Matrix want = Vector(vec({1.0, 1.0 / 3.0})).asDiagonal();
  EXPECT_LE((inv_sqrt(PsdMatrix(a), 0.0).matrix() - want).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(InvSqrt, RotatedMatrixSatisfiesDefiningIdentity) {
  const Matrix r = rotation(30.0);
  const Matrix a = r * Vector(vec({4.0, 1.0})).asDiagonal() * r.transpose();
  const Matrix b = inv_sqrt(PsdMatrix(a), 0.0).matrix();
  EXPECT_LE((b * a * b - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((a * b - b * a).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(InvSqrt, FloorViolationThrows) {
  EXPECT_THROW(inv_sqrt(PsdMatrix::identity(2, 0.5), 1.0), CurvatureFloorError);
}

TEST(MahalanobisProject, InteriorPointIsFixed) {
  const ConvexSet ball = ConvexSet::ball(Vector::Zero(2), 1.0);
  const Vector p = vec({0.3, -0.2});
  const Matrix a = Vector(vec({1.0, 4.0})).asDiagonal();
  EXPECT_EQ(mahalanobis_project(ball, a, p), p);
}

TEST(MahalanobisProject, HandKktOnUnitBall) {
  const ConvexSet ball = ConvexSet::ball(Vector::Zero(2), 1.0);
  const Matrix a = Vector(vec({1.0, 4.0})).asDiagonal();
  EXPECT_LE((mahalanobis_project(ball, a, vec({2.0, 0.0})) - vec({1.0, 0.0})).norm(), 1e-9);
  EXPECT_LE((mahalanobis_project(ball, a, vec({0.0, 2.0})) - vec({0.0, 1.0})).norm(), 1e-9);
}

TEST(MahalanobisProject, IdentityMetricMatchesEuclidean) {
  Rng rng(17);
  std::normal_distribution<double> n(0.0, 2.0);
  const ConvexSet sets[] = {ConvexSet::ball(vec({0.5, -0.5, 0.0}), 1.0),
                            ConvexSet::box(vec({-1.0, 0.0, -0.5}), vec({1.0, 0.5, 0.5})),
                            ConvexSet::operator_l1_ball(1, 1, 3, 1.0)};
  for (const ConvexSet& s : sets) {
    for (int k = 0; k < 50; ++k) {
      const Vector p = vec({n(rng), n(rng), n(rng)});
      EXPECT_LE((mahalanobis_project(s, Matrix::Identity(3, 3), p) - s.euclidean_project(p)).norm(), 1e-8);
    }
  }
}

TEST(MahalanobisProject, NonPsdMetricThrows) {
  const ConvexSet ball = ConvexSet::ball(Vector::Zero(2), 1.0);
  Matrix a(2, 2);
  a << 1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW(mahalanobis_project(ball, a, vec({2.0, 0.0})), InvalidMetricError);
}

TEST(Logdet, ClosedForms) {
  EXPECT_EQ(logdet(PsdMatrix::identity(4)), 0.0);
  const Matrix a = Vector(vec({2.0, 8.0})).asDiagonal();
  EXPECT_NEAR(logdet(PsdMatrix(a)), std::log(16.0), 1e-14);
}

TEST(Logdet, MatchesLuDeterminant) {
  Rng rng(23);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(5, 5);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j) m(i, j) = n(rng);
  const Matrix a = m.transpose() * m + Matrix::Identity(5, 5);
  EXPECT_NEAR(logdet(PsdMatrix(a)), std::log(a.partialPivLu().determinant()), 1e-9);
}

TEST(Logdet, SingularThrows) {
  const Matrix a = Vector(vec({1.0, 0.0})).asDiagonal();
  EXPECT_THROW(logdet(PsdMatrix(a)), SingularMatrixError);
}

TEST(PsdMatrix, RejectsAsymmetricAndIndefinite) {
  Matrix asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(PsdMatrix{asym}, NotPsdError);
  Matrix indef(2, 2);
  indef << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(PsdMatrix{indef}, NotPsdError);
}

TEST(OperatorL1Ball, ProjectionLandsOnBoundary) {
  const ConvexSet s = ConvexSet::operator_l1_ball(3, 2, 2, 1.0);
  Rng rng(2);
  std::normal_distribution<double> n(0.0, 3.0);
  Vector p(12);
  for (Index i = 0; i < 12; ++i) p(i) = n(rng);
  const Vector x = s.euclidean_project(p);
  EXPECT_NEAR(operator_l1_norm(x, 3, 2, 2), 1.0, 1e-9);
  // First-order optimality against random members.
  for (int k = 0; k < 100; ++k) EXPECT_GE((x - p).dot(s.sample(rng) - x), -1e-9);
}

}  // namespace
}  // namespace bcom
