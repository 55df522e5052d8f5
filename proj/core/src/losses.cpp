#include "bcom/losses.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "bcom/errors.hpp"

namespace bcom {

namespace {

double lambda_min(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

double op_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

void check_certificate(const Curvature& c) {
  if (!(c.alpha > 0.0 && c.alpha <= 1.0 && c.beta >= 1.0)) {
    throw ConstructionError("curvature certificate must satisfy 0 < alpha <= 1 <= beta");
  }
}

PsdMatrix gram_of(const Matrix& g) { return PsdMatrix::gram(g); }

}  // namespace

BaseLoss BaseLoss::quadratic(Matrix q, Vector b, double c, Curvature cert) {
  check_certificate(cert);
  if (q.rows() != q.cols() || q.rows() != b.size()) throw ShapeError("BaseLoss::quadratic: shape mismatch");
  const PsdMatrix sym(q);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym.matrix());
  const double scale = std::max(1.0, max_abs(sym.matrix()));
  const double slack = kSemidefiniteTolerance * scale;
  if (eig.eigenvalues().minCoeff() < cert.alpha - slack || eig.eigenvalues().maxCoeff() > cert.beta + slack) {
    throw ConstructionError("BaseLoss::quadratic: spectrum of Q outside the certified band");
  }
  const Vector qinv_b = eig.eigenvectors() *
                        (eig.eigenvalues().cwiseInverse().asDiagonal() * (eig.eigenvectors().transpose() * b));
  const double min_value = c - 0.5 * b.dot(qinv_b);
  if (min_value < -1e-12 * std::max(1.0, std::abs(c))) {
    throw ConstructionError("BaseLoss::quadratic: loss takes negative values");
  }
  return BaseLoss(Quadratic{sym.matrix(), std::move(b), c}, cert);
}

BaseLoss BaseLoss::centered_quadratic(const Matrix& q, const Vector& center, Curvature cert) {
  if (q.rows() != center.size()) throw ShapeError("BaseLoss::centered_quadratic: shape mismatch");
  const Matrix sym = 0.5 * (q + q.transpose());
  Vector b = -(sym * center);
  const double c = 0.5 * center.dot(sym * center);
  return quadratic(sym, std::move(b), c, cert);
}

BaseLoss BaseLoss::pseudo_huber(double alpha, double s, Vector center, std::optional<double> beta) {
  if (s < 0.0) throw ConstructionError("BaseLoss::pseudo_huber: s must be >= 0");
  if (beta && *beta < alpha + s) throw ConstructionError("BaseLoss::pseudo_huber: claimed beta below alpha + s");
  const Curvature cert{alpha, beta.value_or(alpha + s)};
  check_certificate(cert);
  return BaseLoss(PseudoHuber{alpha, s, std::move(center)}, cert);
}

Index BaseLoss::dim() const {
  return std::visit(
      [](const auto& k) -> Index {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Quadratic>) {
          return k.b.size();
        } else {
          return k.center.size();
        }
      },
      kind_);
}

double BaseLoss::eval(const Vector& v) const {
  if (v.size() != dim()) throw ShapeError("BaseLoss::eval: dimension mismatch");
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Quadratic>) {
          return std::max(0.0, 0.5 * v.dot(k.q * v) + k.b.dot(v) + k.c);
        } else {
          const Vector r = v - k.center;
          double huber = 0.0;
          for (Index i = 0; i < r.size(); ++i) huber += std::sqrt(1.0 + r(i) * r(i)) - 1.0;
          return 0.5 * k.alpha * r.squaredNorm() + k.s * huber;
        }
      },
      kind_);
}

Vector BaseLoss::grad(const Vector& v) const {
  if (v.size() != dim()) throw ShapeError("BaseLoss::grad: dimension mismatch");
  return std::visit(
      [&](const auto& k) -> Vector {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Quadratic>) {
          return k.q * v + k.b;
        } else {
          const Vector r = v - k.center;
          Vector g(r.size());
          for (Index i = 0; i < r.size(); ++i) g(i) = k.alpha * r(i) + k.s * r(i) / std::sqrt(1.0 + r(i) * r(i));
          return g;
        }
      },
      kind_);
}

Matrix BaseLoss::hess(const Vector& v) const {
  if (v.size() != dim()) throw ShapeError("BaseLoss::hess: dimension mismatch");
  return std::visit(
      [&](const auto& k) -> Matrix {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Quadratic>) {
          return k.q;
        } else {
          const Vector r = v - k.center;
          Vector diag(r.size());
          for (Index i = 0; i < r.size(); ++i) {
            const double q = 1.0 + r(i) * r(i);
            diag(i) = k.alpha + k.s / (q * std::sqrt(q));
          }
          return diag.asDiagonal();
        }
      },
      kind_);
}

Vector BaseLoss::minimizer() const {
  return std::visit(
      [](const auto& k) -> Vector {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Quadratic>) {
          return k.q.ldlt().solve(-k.b);
        } else {
          return k.center;
        }
      },
      kind_);
}

AffineMemoryLoss::AffineMemoryLoss(BaseLoss base, Vector offset, BlockList blocks, std::vector<Matrix> signals)
    : base_(std::move(base)),
      offset_(std::move(offset)),
      blocks_(std::move(blocks)),
      signals_(std::move(signals)),
      h_t_(PsdMatrix::identity(0)) {
  if (!blocks_ || blocks_->empty()) throw ArityError("AffineMemoryLoss: no Markov blocks");
  if (signals_.size() != blocks_->size()) throw ArityError("AffineMemoryLoss: blocks and signals differ in count");
  if (offset_.size() != base_.dim()) throw ShapeError("AffineMemoryLoss: offset does not match the base loss");
  const Index rows = offset_.size();
  const Index inner = (*blocks_)[0].cols();
  const Index cols = signals_[0].cols();
  w_.reserve(signals_.size());
  g_t_ = Matrix::Zero(rows, cols);
  for (std::size_t i = 0; i < signals_.size(); ++i) {
    const Matrix& g = (*blocks_)[i];
    const Matrix& y = signals_[i];
    if (g.rows() != rows || g.cols() != inner) throw ShapeError("AffineMemoryLoss: block shape mismatch");
    if (y.rows() != inner || y.cols() != cols) throw ShapeError("AffineMemoryLoss: signal shape mismatch");
    w_.push_back(g * y);
    g_t_ += w_.back();
  }
  h_t_ = gram_of(g_t_);
}

void AffineMemoryLoss::check_window(const std::vector<Vector>& window) const {
  if (static_cast<int>(window.size()) != memory()) throw ArityError("AffineMemoryLoss: window length mismatch");
  for (const Vector& z : window) {
    if (z.size() != d()) throw ShapeError("AffineMemoryLoss: decision dimension mismatch");
  }
}

Vector AffineMemoryLoss::argument(const std::vector<Vector>& window) const {
  check_window(window);
  Vector v = offset_;
  const int m = memory();
  for (int i = 0; i < m; ++i) v.noalias() += w_[static_cast<std::size_t>(i)] * window[static_cast<std::size_t>(m - 1 - i)];
  return v;
}

double AffineMemoryLoss::eval(const std::vector<Vector>& window) const { return base_.eval(argument(window)); }

std::vector<Vector> AffineMemoryLoss::grad(const std::vector<Vector>& window) const {
  const Vector g = base_.grad(argument(window));
  const int m = memory();
  std::vector<Vector> out(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(m - 1 - i)] = w_[static_cast<std::size_t>(i)].transpose() * g;
  return out;
}

double AffineMemoryLoss::eval_unrolled(const std::vector<Vector>& window) const {
  check_window(window);
  Vector v = offset_;
  const int m = memory();
  for (int i = 0; i < m; ++i) {
    const Vector inner = signals_[static_cast<std::size_t>(i)] * window[static_cast<std::size_t>(m - 1 - i)];
    v += (*blocks_)[static_cast<std::size_t>(i)] * inner;
  }
  return base_.eval(v);
}

double AffineMemoryLoss::eval_u(const Vector& z) const {
  return eval(std::vector<Vector>(static_cast<std::size_t>(memory()), z));
}

Vector AffineMemoryLoss::grad_u(const Vector& z) const {
  if (z.size() != d()) throw ShapeError("AffineMemoryLoss::grad_u: dimension mismatch");
  return g_t_.transpose() * base_.grad(offset_ + g_t_ * z);
}

Matrix AffineMemoryLoss::hess_u(const Vector& z) const {
  if (z.size() != d()) throw ShapeError("AffineMemoryLoss::hess_u: dimension mismatch");
  Matrix h = g_t_.transpose() * base_.hess(offset_ + g_t_ * z) * g_t_;
  return 0.5 * (h + h.transpose());
}

KappaReport verify_kappa_convexity(const AffineMemoryLoss& f, const ConvexSet& domain, int probes, double tol,
                                   Rng& rng, std::optional<Curvature> claimed, double fd_tol) {
  if (domain.dimension() != f.d()) throw ShapeError("verify_kappa_convexity: domain dimension mismatch");
  const Curvature cert = claimed.value_or(f.base().curvature());
  const Matrix& h = f.h_t().matrix();
  const Index d = f.d();
  const ConvexSet unit = ConvexSet::ball(Vector::Zero(d), 1.0);
  constexpr double kStep = 1e-4;
  KappaReport report;
  report.probes = probes;
  for (int k = 0; k < probes; ++k) {
    const Vector z = domain.sample(rng) + unit.sample(rng);
    const Matrix hu = f.hess_u(z);
    const double low = lambda_min(hu - cert.alpha * h);
    const double high = lambda_min(cert.beta * h - hu);
    report.worst_violation = std::min({report.worst_violation, low, high});

    Matrix fd(d, d);
    for (Index i = 0; i < d; ++i) {
      for (Index j = i; j < d; ++j) {
        Vector pp = z, pm = z, mp = z, mm = z;
        pp(i) += kStep;
        pp(j) += kStep;
        pm(i) += kStep;
        pm(j) -= kStep;
        mp(i) -= kStep;
        mp(j) += kStep;
        mm(i) -= kStep;
        mm(j) -= kStep;
        fd(i, j) = (f.eval_u(pp) - f.eval_u(pm) - f.eval_u(mp) + f.eval_u(mm)) / (4.0 * kStep * kStep);
        fd(j, i) = fd(i, j);
      }
    }
    const double rel = max_abs(fd - hu) / std::max(1.0, max_abs(hu));
    report.worst_fd_error = std::max(report.worst_fd_error, rel);
  }
  report.ok = report.worst_violation >= -tol && report.worst_fd_error <= fd_tol;
  return report;
}

double convolution_modulus_lower_bound(const std::vector<Matrix>& blocks, int n) {
  if (n < 1) throw InvalidDimensionError("convolution_modulus_lower_bound: horizon must be >= 1");
  if (blocks.empty()) throw ArityError("convolution_modulus_lower_bound: no blocks");
  const Index r = blocks[0].rows();
  const Index c = blocks[0].cols();
  Matrix t = Matrix::Zero(n * r, n * c);
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col <= row; ++col) {
      const std::size_t lag = static_cast<std::size_t>(row - col);
      if (lag < blocks.size()) t.block(row * r, col * c, r, c) = blocks[lag];
    }
  }
  return std::max(0.0, lambda_min(t.transpose() * t));
}

BcomInstance make_synthetic_bcom_instance(const SyntheticBcomConfig& cfg) {
  if (cfg.d < 1) throw ConfigError("d", "must be >= 1");
  if (cfg.m < 1) throw ConfigError("m", "must be >= 1");
  if (cfg.horizon < 1) throw ConfigError("T", "must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw ConfigError("alpha", "must lie in (0, 1]");
  if (!(cfg.beta >= 1.0)) throw ConfigError("beta", "must be >= 1");
  if (cfg.beta < cfg.alpha) throw ConfigError("beta", "must be >= alpha");
  if (!(cfg.r_h >= 1.0)) throw ConfigError("r_h", "must be >= 1");
  if (!(cfg.set_radius > 0.0)) throw ConfigError("set_radius", "must be positive");
  if (cfg.signal_jitter < 0.0) throw ConfigError("signal_jitter", "must be >= 0");
  if (cfg.target_fraction < 0.0 || cfg.target_fraction > 1.0) throw ConfigError("target_fraction", "must lie in [0, 1]");

  const Index d = cfg.d;
  const int m = cfg.m;
  Rng rng = make_stream(cfg.seed, Stream::kInstance);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](Index rows, Index cols) {
    Matrix g(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
    return g;
  };

  AdversarySchedule adversary = cfg.adversary;
  adversary.seed = make_stream(cfg.seed, Stream::kAdversary)();

  std::vector<Matrix> raw_blocks;
  raw_blocks.reserve(static_cast<std::size_t>(m));
  const double root_d = std::sqrt(static_cast<double>(d));
  for (int i = 0; i < m; ++i) {
    Matrix noise = gaussian(d, d) / root_d;
    raw_blocks.push_back(i == 0 ? Matrix(Matrix::Identity(d, d) + 0.3 * noise) : Matrix(std::pow(0.5, i) * noise));
  }

  // Signals Y_s for s = 2-m .. horizon, index s + m - 2.
  const double y_scale = std::min(1.0, 0.95 * cfg.r_h / (1.0 + cfg.signal_jitter));
  const int first_signal = 2 - m;
  std::vector<Matrix> ys;
  ys.reserve(static_cast<std::size_t>(cfg.horizon + m - 1));
  for (int s = first_signal; s <= cfg.horizon; ++s) {
    Matrix e = Matrix::Zero(d, d);
    if (cfg.signal_jitter > 0.0 && adversary.radius > 0.0) {
      const Vector flat = adversary.at(s, d * d, 1) / adversary.radius;
      e = Eigen::Map<const Matrix>(flat.data(), d, d);
    }
    ys.push_back(y_scale * (Matrix::Identity(d, d) + cfg.signal_jitter * e));
  }
  auto signal = [&](int s) -> const Matrix& { return ys[static_cast<std::size_t>(s - first_signal)]; };

  double g_max = 0.0;
  for (int t = 1; t <= cfg.horizon; ++t) {
    Matrix g = Matrix::Zero(d, d);
    for (int i = 0; i < m; ++i) g += raw_blocks[static_cast<std::size_t>(i)] * signal(t - i);
    g_max = std::max(g_max, op_norm(g));
  }
  const double scale = std::min(0.95 * cfg.r_h, std::sqrt(0.95 * cfg.r_h)) / g_max;
  auto blocks = std::make_shared<std::vector<Matrix>>();
  for (const Matrix& g : raw_blocks) blocks->push_back(scale * g);
  const BlockList shared_blocks = blocks;

  const Vector target = cfg.target_fraction * cfg.set_radius * sample_unit_sphere(d, rng).v;
  const Curvature cert{cfg.alpha, cfg.beta};

  std::optional<BaseLoss> base;
  if (cfg.kind == BaseKind::kPseudoHuber) {
    base = BaseLoss::pseudo_huber(cfg.alpha, cfg.beta - cfg.alpha, Vector::Zero(d));
  } else {
    Eigen::HouseholderQR<Matrix> qr(gaussian(d, d));
    const Matrix rot = qr.householderQ();
    Vector spectrum(d);
    for (Index i = 0; i < d; ++i) {
      spectrum(i) = d == 1 ? cfg.alpha : cfg.alpha + (cfg.beta - cfg.alpha) * static_cast<double>(i) / (d - 1);
    }
    Matrix q = rot * spectrum.asDiagonal() * rot.transpose();
    if (cfg.alpha == cfg.beta) q = cfg.alpha * Matrix::Identity(d, d);
    base = BaseLoss::centered_quadratic(q, Vector::Zero(d), cert);
  }

  BcomInstance inst{{}, ConvexSet::ball(Vector::Zero(d), cfg.set_radius), {}, target};
  inst.losses.reserve(static_cast<std::size_t>(cfg.horizon));
  const double reach = inst.set.max_norm() + 1.0;
  double g_f = 0.0;
  double g_meas = 0.0;
  double h_meas = 0.0;
  double y_meas = 0.0;
  for (const Matrix& y : ys) y_meas = std::max(y_meas, op_norm(y));
  for (int t = 1; t <= cfg.horizon; ++t) {
    std::vector<Matrix> window;
    window.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) window.push_back(signal(t - i));
    Matrix g_t = Matrix::Zero(d, d);
    for (int i = 0; i < m; ++i) g_t += (*blocks)[static_cast<std::size_t>(i)] * window[static_cast<std::size_t>(i)];
    Vector offset = -(g_t * target) + adversary.at(t, d, 0);
    AffineMemoryLoss loss(*base, std::move(offset), shared_blocks, std::move(window));
    double w_sq = 0.0;
    double w_sum = 0.0;
    for (const Matrix& w : loss.weights()) {
      const double nw = op_norm(w);
      w_sq += nw * nw;
      w_sum += nw;
    }
    const double arg_bound = (loss.offset() - base->minimizer()).norm() + w_sum * reach;
    g_f = std::max(g_f, std::sqrt(w_sq) * cfg.beta * arg_bound);
    const double gn = op_norm(loss.g_t());
    g_meas = std::max(g_meas, gn);
    h_meas = std::max(h_meas, op_norm(loss.h_t().matrix()));
    inst.losses.push_back(std::move(loss));
  }

  inst.cert.alpha = cfg.alpha;
  inst.cert.beta = cfg.beta;
  inst.cert.kappa0 = cfg.beta / cfg.alpha;
  inst.cert.g_f = g_f;
  inst.cert.diameter = inst.set.diameter();
  inst.cert.r_h = cfg.r_h;
  inst.cert.measured_g = g_meas;
  inst.cert.measured_y = y_meas;
  inst.cert.measured_h = h_meas;
  return inst;
}

}  // namespace bcom
