#include <Eigen/QR>
#include <cmath>
#include <random>
#include <sstream>

#include "bcom/checks.hpp"
#include "bcom/geometry.hpp"

namespace bcom {

namespace {

Matrix random_spd(Index d, double lo, double hi, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(lo, hi);
  Matrix g(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ();
  Vector lam(d);
  for (Index i = 0; i < d; ++i) lam(i) = unif(rng);
  return q * lam.asDiagonal() * q.transpose();
}

std::vector<ConvexSet> sample_sets(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector c(3);
  c << normal(rng), normal(rng), normal(rng);
  Vector lo(3);
  lo << -1.0, -0.5, -2.0;
  Vector hi(3);
  hi << 1.0, 0.5, 0.0;
  return {ConvexSet::ball(c, 1.5), ConvexSet::box(lo, hi), ConvexSet::operator_l1_ball(2, 2, 1, 1.0)};
}

CheckOutcome projection_vi(std::uint64_t seed) {
  Rng rng = keyed_rng(seed, {101});
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  int membership_failures = 0;
  for (const ConvexSet& set : sample_sets(rng)) {
    const Index d = set.dimension();
    for (int k = 0; k < 4; ++k) {
      const Matrix a = random_spd(d, 1e-3, 10.0, rng);
      for (int p = 0; p < 25; ++p) {
        Vector q(d);
        for (Index i = 0; i < d; ++i) q(i) = 3.0 * normal(rng);
        const Vector x = mahalanobis_project(set, a, q);
        if (!set.contains(x, 1e-7)) ++membership_failures;
        const Vector ax = a * (x - q);
        for (int s = 0; s < 100; ++s) {
          const Vector y = set.sample(rng);
          worst = std::min(worst, ax.dot(y - x));
        }
      }
    }
  }
  std::ostringstream os;
  os << "worst <A(x-p), y-x> = " << worst << ", membership failures = " << membership_failures;
  return {worst >= -1e-7 && membership_failures == 0, os.str()};
}

CheckOutcome projection_identity(std::uint64_t seed) {
  Rng rng = keyed_rng(seed, {102});
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (const ConvexSet& set : sample_sets(rng)) {
    const Index d = set.dimension();
    const Matrix eye = Matrix::Identity(d, d);
    for (int p = 0; p < 100; ++p) {
      Vector q(d);
      for (Index i = 0; i < d; ++i) q(i) = 3.0 * normal(rng);
      worst = std::max(worst, (mahalanobis_project(set, eye, q) - set.euclidean_project(q)).norm());
    }
  }
  std::ostringstream os;
  os << "max |proj_I - proj_euclid| = " << worst;
  return {worst <= 1e-8, os.str()};
}

CheckOutcome sphere_moment(std::uint64_t seed) {
  Rng rng = keyed_rng(seed, {103});
  const Index d = 3;
  const int n = 100000;
  Matrix acc = Matrix::Zero(d, d);
  double norm_err = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vector v = sample_unit_sphere(d, rng).v;
    norm_err = std::max(norm_err, std::abs(v.norm() - 1.0));
    acc += v * v.transpose();
  }
  acc /= static_cast<double>(n);
  const double err = max_abs(acc - Matrix::Identity(d, d) / static_cast<double>(d));
  const double tol = 5.0 / std::sqrt(static_cast<double>(n));
  std::ostringstream os;
  os << "max |E[vv^T] - I/d| = " << err << " (tol " << tol << "), max | |v| - 1 | = " << norm_err;
  return {err <= tol && norm_err <= 1e-12, os.str()};
}

CheckOutcome inv_sqrt_commutes(std::uint64_t seed) {
  Rng rng = keyed_rng(seed, {104});
  double worst = 0.0;
  double worst_identity = 0.0;
  for (int k = 0; k < 50; ++k) {
    const PsdMatrix a(random_spd(4, 1e-2, 20.0, rng));
    const Matrix b = inv_sqrt(a, 1e-3).matrix();
    worst = std::max(worst, max_abs(a.matrix() * b - b * a.matrix()));
    worst_identity = std::max(worst_identity, max_abs(b * a.matrix() * b - Matrix::Identity(4, 4)));
  }
  std::ostringstream os;
  os << "max |AB - BA| = " << worst << ", max |BAB - I| = " << worst_identity;
  return {worst <= 1e-9 && worst_identity <= 1e-9, os.str()};
}

}  // namespace

std::vector<CheckSuite> geometry_checks() {
  return {
      {"geometry", "projection_variational_inequality", projection_vi},
      {"geometry", "projection_identity_metric", projection_identity},
      {"geometry", "sphere_second_moment", sphere_moment},
      {"geometry", "inv_sqrt_commutes", inv_sqrt_commutes},
  };
}

}  // namespace bcom
