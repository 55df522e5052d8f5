#include "bcom/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "bcom/errors.hpp"

namespace bcom {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr int kMaxProjectionIterations = 10000;
constexpr double kProjectionStepTolerance = 1e-10;

std::string dims(Index a, Index b) {
  std::ostringstream os;
  os << a << " vs " << b;
  return os.str();
}

void require_dim(Index expected, Index got, const char* what) {
  if (expected != got) throw ShapeError(std::string(what) + ": dimension mismatch " + dims(expected, got));
}

// Descending singular values of one DRC block.
Vector block_singular_values(const Vector& x, Index offset, int du, int dy) {
  Eigen::Map<const RowMajorMatrix> block(x.data() + offset, du, dy);
  if (du == 1 || dy == 1) {
    Vector s(1);
    s(0) = block.norm();
    return s;
  }
  Eigen::JacobiSVD<Matrix> svd{Matrix(block)};
  return svd.singularValues();
}

// Largest c >= 0 with sum_i (sigma_i - c)_+ = shrink, or 0 if the whole block
// would be consumed. sigma is sorted descending.
double clip_level(const Vector& sigma, double shrink) {
  const double total = sigma.sum();
  if (total <= shrink) return 0.0;
  double prefix = 0.0;
  const Index n = sigma.size();
  for (Index k = 0; k < n; ++k) {
    prefix += sigma(k);
    const double c = (prefix - shrink) / static_cast<double>(k + 1);
    if (k + 1 == n || sigma(k + 1) <= c) return std::max(c, 0.0);
  }
  return 0.0;
}

Vector project_operator_l1(const OperatorL1Ball& s, const Vector& x) {
  const int block_size = s.du * s.dy;
  std::vector<Vector> sigmas(static_cast<std::size_t>(s.memory));
  double norm = 0.0;
  double hi = 0.0;
  for (int k = 0; k < s.memory; ++k) {
    sigmas[static_cast<std::size_t>(k)] = block_singular_values(x, static_cast<Index>(k) * block_size, s.du, s.dy);
    norm += sigmas[static_cast<std::size_t>(k)](0);
    hi = std::max(hi, sigmas[static_cast<std::size_t>(k)].sum());
  }
  if (norm <= s.radius) return x;

  auto total_level = [&](double shrink) {
    double total = 0.0;
    for (const Vector& sg : sigmas) total += clip_level(sg, shrink);
    return total;
  };
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (total_level(mid) > s.radius) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  Vector out = x;
  for (int k = 0; k < s.memory; ++k) {
    const Index offset = static_cast<Index>(k) * block_size;
    const double level = clip_level(sigmas[static_cast<std::size_t>(k)], hi);
    Eigen::Map<RowMajorMatrix> block(out.data() + offset, s.du, s.dy);
    if (s.du == 1 || s.dy == 1) {
      const double n = sigmas[static_cast<std::size_t>(k)](0);
      if (n > level) block *= (n > 0.0 ? level / n : 0.0);
      continue;
    }
    Eigen::JacobiSVD<Matrix> svd(Matrix(block), Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector clipped = svd.singularValues().cwiseMin(level);
    block = svd.matrixU() * clipped.asDiagonal() * svd.matrixV().transpose();
  }
  return out;
}

Vector project_ball_metric(const EuclideanBall& ball, const SpectralFactor& metric, const Vector& p) {
  const Vector offset = p - ball.center;
  if (offset.norm() <= ball.radius) return p;
  const Vector& lambda = metric.eigenvalues();
  const Vector q = metric.eigenvectors().transpose() * offset;
  const double r2 = ball.radius * ball.radius;
  auto radius_sq = [&](double mu) {
    double acc = 0.0;
    for (Index i = 0; i < q.size(); ++i) {
      const double c = lambda(i) * q(i) / (lambda(i) + mu);
      acc += c * c;
    }
    return acc;
  };
  double lo = 0.0;
  double hi = std::max(metric.max_eigenvalue(), 1e-300);
  while (radius_sq(hi) > r2) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 400 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (radius_sq(mid) > r2) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  Vector scaled(q.size());
  for (Index i = 0; i < q.size(); ++i) scaled(i) = lambda(i) * q(i) / (lambda(i) + hi);
  return ball.center + metric.eigenvectors() * scaled;
}

// Accelerated projected gradient on (x-p)^T A (x-p) with gradient-based
// restarts.
Vector project_generic_metric(const ConvexSet& set, const SpectralFactor& metric, const Vector& p) {
  Vector x = set.euclidean_project(p);
  if ((x - p).norm() == 0.0) return x;
  const double inv_lipschitz = 1.0 / metric.max_eigenvalue();
  Vector y = x;
  double theta = 1.0;
  double step = 0.0;
  for (int it = 0; it < kMaxProjectionIterations; ++it) {
    const Vector grad = metric.apply_power(1.0, y - p);
    Vector next = set.euclidean_project(y - inv_lipschitz * grad);
    const Vector delta = next - x;
    step = delta.norm();
    if (step < kProjectionStepTolerance) return next;
    if ((y - next).dot(delta) > 0.0) {
      theta = 1.0;
      y = next;
    } else {
      const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
      y = next + ((theta - 1.0) / theta_next) * delta;
      theta = theta_next;
    }
    x = std::move(next);
  }
  throw ProjectionNotConvergedError("metric projection did not converge", step);
}

}  // namespace

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

PsdMatrix::PsdMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("PsdMatrix: matrix is not square " + dims(m.rows(), m.cols()));
  const double scale = std::max(1.0, max_abs(m));
  const double asymmetry = max_abs(m - m.transpose());
  if (asymmetry > kSymmetryTolerance * scale) throw NotPsdError("PsdMatrix: matrix is not symmetric");
  m_ = 0.5 * (m + m.transpose());
  if (m_.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m_, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -kSemidefiniteTolerance * scale) {
      throw NotPsdError("PsdMatrix: matrix has a negative eigenvalue");
    }
  }
}

PsdMatrix PsdMatrix::identity(Index d, double scale) {
  if (scale < 0.0) throw NotPsdError("PsdMatrix::identity: negative scale");
  return PsdMatrix(Matrix(scale * Matrix::Identity(d, d)), Trusted{});
}

PsdMatrix PsdMatrix::gram(const Matrix& g) {
  Matrix h = g.transpose() * g;
  Matrix sym = 0.5 * (h + h.transpose());
  return PsdMatrix(std::move(sym), Trusted{});
}

PsdMatrix PsdMatrix::plus_scaled(const PsdMatrix& other, double scale) const {
  require_dim(dim(), other.dim(), "PsdMatrix::plus_scaled");
  if (scale < 0.0) throw NotPsdError("PsdMatrix::plus_scaled: negative scale");
  return PsdMatrix(Matrix(m_ + scale * other.m_), Trusted{});
}

SpectralFactor::SpectralFactor(const PsdMatrix& a) {
  if (a.dim() == 0) return;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a.matrix());
  values_ = eig.eigenvalues();
  vectors_ = eig.eigenvectors();
}

Matrix SpectralFactor::power(double p) const {
  Vector f(values_.size());
  for (Index i = 0; i < values_.size(); ++i) {
    const double lam = std::max(values_(i), 0.0);
    f(i) = (p == 0.5) ? std::sqrt(lam) : std::pow(lam, p);
  }
  Matrix out = vectors_ * f.asDiagonal() * vectors_.transpose();
  return 0.5 * (out + out.transpose());
}

Matrix SpectralFactor::inv_sqrt(double floor) const {
  const double lo = min_eigenvalue();
  if (lo < floor || lo <= 0.0) throw CurvatureFloorError(lo, floor);
  return power(-0.5);
}

Vector SpectralFactor::apply_power(double p, const Vector& x) const {
  Vector q = vectors_.transpose() * x;
  for (Index i = 0; i < q.size(); ++i) q(i) *= (p == 1.0) ? values_(i) : std::pow(values_(i), p);
  return vectors_ * q;
}

double SpectralFactor::logdet() const {
  if (values_.size() == 0) return 0.0;
  if (min_eigenvalue() <= 0.0) throw SingularMatrixError("logdet: matrix is singular");
  return values_.array().log().sum();
}

UnitSphereSample sample_unit_sphere(Index d, Rng& rng) {
  if (d < 1) throw InvalidDimensionError("sample_unit_sphere: dimension must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(d);
  double n = 0.0;
  do {
    for (Index i = 0; i < d; ++i) v(i) = normal(rng);
    n = v.norm();
  } while (n == 0.0);
  return {v / n};
}

PsdMatrix inv_sqrt(const PsdMatrix& a, double floor) {
  SpectralFactor f(a);
  return PsdMatrix(f.inv_sqrt(floor));
}

double logdet(const PsdMatrix& a) { return SpectralFactor(a).logdet(); }

ConvexSet::ConvexSet(Shape shape) : shape_(std::move(shape)) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, EuclideanBall>) {
          if (!(s.radius > 0.0)) throw ShapeError("EuclideanBall: radius must be positive");
        } else if constexpr (std::is_same_v<T, Box>) {
          if (s.lower.size() != s.upper.size()) throw ShapeError("Box: bound dimensions differ");
          if ((s.lower.array() > s.upper.array()).any()) throw ShapeError("Box: lower exceeds upper");
        } else {
          if (s.memory < 1 || s.du < 1 || s.dy < 1) throw InvalidDimensionError("OperatorL1Ball: bad dimensions");
          if (!(s.radius > 0.0)) throw ShapeError("OperatorL1Ball: radius must be positive");
        }
      },
      shape_);
}

ConvexSet ConvexSet::ball(Vector center, double radius) { return ConvexSet(EuclideanBall{std::move(center), radius}); }

ConvexSet ConvexSet::box(Vector lower, Vector upper) { return ConvexSet(Box{std::move(lower), std::move(upper)}); }

ConvexSet ConvexSet::operator_l1_ball(int memory, int du, int dy, double radius) {
  return ConvexSet(OperatorL1Ball{memory, du, dy, radius});
}

Index ConvexSet::dimension() const {
  return std::visit(
      [](const auto& s) -> Index {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, EuclideanBall>) {
          return s.center.size();
        } else if constexpr (std::is_same_v<T, Box>) {
          return s.lower.size();
        } else {
          return static_cast<Index>(s.memory) * s.du * s.dy;
        }
      },
      shape_);
}

Vector ConvexSet::euclidean_project(const Vector& x) const {
  require_dim(dimension(), x.size(), "euclidean_project");
  return std::visit(
      [&](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, EuclideanBall>) {
          const Vector offset = x - s.center;
          const double n = offset.norm();
          if (n <= s.radius) return x;
          return s.center + (s.radius / n) * offset;
        } else if constexpr (std::is_same_v<T, Box>) {
          return x.cwiseMax(s.lower).cwiseMin(s.upper);
        } else {
          return project_operator_l1(s, x);
        }
      },
      shape_);
}

bool ConvexSet::contains(const Vector& x, double tol) const {
  if (x.size() != dimension()) return false;
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, EuclideanBall>) {
          return (x - s.center).norm() <= s.radius + tol;
        } else if constexpr (std::is_same_v<T, Box>) {
          return ((x.array() >= s.lower.array() - tol) && (x.array() <= s.upper.array() + tol)).all();
        } else {
          return operator_l1_norm(x, s.memory, s.du, s.dy) <= s.radius + tol;
        }
      },
      shape_);
}

Vector ConvexSet::center() const {
  return std::visit(
      [&](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, EuclideanBall>) {
          return s.center;
        } else if constexpr (std::is_same_v<T, Box>) {
          return 0.5 * (s.lower + s.upper);
        } else {
          return Vector::Zero(dimension());
        }
      },
      shape_);
}

double ConvexSet::diameter() const {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, EuclideanBall>) {
          return 2.0 * s.radius;
        } else if constexpr (std::is_same_v<T, Box>) {
          return (s.upper - s.lower).norm();
        } else {
          return 2.0 * s.radius * std::sqrt(static_cast<double>(std::min(s.du, s.dy)));
        }
      },
      shape_);
}

double ConvexSet::max_norm() const {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, EuclideanBall>) {
          return s.center.norm() + s.radius;
        } else if constexpr (std::is_same_v<T, Box>) {
          return s.lower.cwiseAbs().cwiseMax(s.upper.cwiseAbs()).norm();
        } else {
          return s.radius * std::sqrt(static_cast<double>(std::min(s.du, s.dy)));
        }
      },
      shape_);
}

Vector ConvexSet::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Index d = dimension();
  return std::visit(
      [&](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, EuclideanBall>) {
          const Vector dir = sample_unit_sphere(d, rng).v;
          const double r = s.radius * std::pow(unif(rng), 1.0 / static_cast<double>(d));
          return s.center + r * dir;
        } else if constexpr (std::is_same_v<T, Box>) {
          Vector x(d);
          for (Index i = 0; i < d; ++i) x(i) = s.lower(i) + (s.upper(i) - s.lower(i)) * unif(rng);
          return x;
        } else {
          const Vector dir = sample_unit_sphere(d, rng).v;
          const double n = operator_l1_norm(dir, s.memory, s.du, s.dy);
          const double r = s.radius * std::pow(unif(rng), 1.0 / static_cast<double>(d));
          return (r / n) * dir;
        }
      },
      shape_);
}

double operator_l1_norm(const Vector& x, int memory, int du, int dy) {
  const Index expected = static_cast<Index>(memory) * du * dy;
  require_dim(expected, x.size(), "operator_l1_norm");
  double total = 0.0;
  for (int k = 0; k < memory; ++k) total += block_singular_values(x, static_cast<Index>(k) * du * dy, du, dy)(0);
  return total;
}

Vector mahalanobis_project(const ConvexSet& set, const SpectralFactor& metric, const Vector& p) {
  require_dim(set.dimension(), p.size(), "mahalanobis_project");
  require_dim(set.dimension(), metric.dim(), "mahalanobis_project metric");
  if (!(metric.min_eigenvalue() > 0.0)) throw InvalidMetricError("mahalanobis_project: metric is not positive definite");
  if (const auto* ball = std::get_if<EuclideanBall>(&set.shape())) return project_ball_metric(*ball, metric, p);
  return project_generic_metric(set, metric, p);
}

Vector mahalanobis_project(const ConvexSet& set, const PsdMatrix& metric, const Vector& p) {
  return mahalanobis_project(set, SpectralFactor(metric), p);
}

Vector mahalanobis_project(const ConvexSet& set, const Matrix& metric, const Vector& p) {
  try {
    return mahalanobis_project(set, PsdMatrix(metric), p);
  } catch (const NotPsdError& e) {
    throw InvalidMetricError(std::string("mahalanobis_project: ") + e.what());
  }
}

}  // namespace bcom
