#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "bcom/adversary.hpp"
#include "bcom/geometry.hpp"

namespace bcom {

struct Curvature {
  double alpha = 1.0;
  double beta = 1.0;
};

// Strongly convex, smooth base loss with a certified curvature band
// alpha*I <= hess <= beta*I, 0 < alpha <= 1 <= beta.
class BaseLoss {
 public:
  // l(v) = 0.5 v^T Q v + b^T v + c
  struct Quadratic {
    Matrix q;
    Vector b;
    double c = 0.0;
  };
  // l(v) = (alpha/2)||v - center||^2 + s * sum_i (sqrt(1 + r_i^2) - 1),  r = v - center
  struct PseudoHuber {
    double alpha = 1.0;
    double s = 0.0;
    Vector center;
  };
  using Kind = std::variant<Quadratic, PseudoHuber>;

  // Throws ConstructionError if Q's spectrum leaves [alpha, beta] or the
  // quadratic can go negative.
  static BaseLoss quadratic(Matrix q, Vector b, double c, Curvature cert);
  // 0.5 (v - center)^T Q (v - center), minimum value zero.
  static BaseLoss centered_quadratic(const Matrix& q, const Vector& center, Curvature cert);
  // Certificate (alpha, beta) with beta defaulting to alpha + s; a larger beta
  // may be claimed so that a family shares one band.
  static BaseLoss pseudo_huber(double alpha, double s, Vector center, std::optional<double> beta = std::nullopt);

  double eval(const Vector& v) const;
  Vector grad(const Vector& v) const;
  Matrix hess(const Vector& v) const;
  Vector minimizer() const;

  Index dim() const;
  const Curvature& curvature() const { return cert_; }
  const Kind& kind() const { return kind_; }

 private:
  BaseLoss(Kind kind, Curvature cert) : kind_(std::move(kind)), cert_(cert) {}

  Kind kind_;
  Curvature cert_;
};

using BlockList = std::shared_ptr<const std::vector<Matrix>>;

// f_t(z_{t-m+1..t}) = l(B_t + sum_i G^[i] Y_{t-i} z_{t-i}).
//
// signals[i] holds Y_{t-i}. Windows are passed oldest first, so window[m-1-i]
// is z_{t-i}. The products W_i = G^[i] Y_{t-i}, G_t = sum_i W_i and
// H_t = G_t^T G_t are formed once at construction.
class AffineMemoryLoss {
 public:
  AffineMemoryLoss(BaseLoss base, Vector offset, BlockList blocks, std::vector<Matrix> signals);

  int memory() const { return static_cast<int>(signals_.size()); }
  Index n() const { return offset_.size(); }
  Index p() const { return (*blocks_)[0].cols(); }
  Index d() const { return g_t_.cols(); }

  double eval(const std::vector<Vector>& window) const;
  // Gradient with respect to the stacked window, same (oldest-first) order.
  std::vector<Vector> grad(const std::vector<Vector>& window) const;
  // Evaluates through G^[i] (Y_{t-i} z) without the cached products.
  double eval_unrolled(const std::vector<Vector>& window) const;

  double eval_u(const Vector& z) const;
  Vector grad_u(const Vector& z) const;
  Matrix hess_u(const Vector& z) const;

  const Matrix& g_t() const { return g_t_; }
  const PsdMatrix& h_t() const { return h_t_; }
  const BaseLoss& base() const { return base_; }
  const Vector& offset() const { return offset_; }
  const std::vector<Matrix>& blocks() const { return *blocks_; }
  const std::vector<Matrix>& signals() const { return signals_; }
  const std::vector<Matrix>& weights() const { return w_; }

 private:
  void check_window(const std::vector<Vector>& window) const;
  Vector argument(const std::vector<Vector>& window) const;

  BaseLoss base_;
  Vector offset_;
  BlockList blocks_;
  std::vector<Matrix> signals_;
  std::vector<Matrix> w_;
  Matrix g_t_;
  PsdMatrix h_t_;
};

struct KappaReport {
  bool ok = true;
  // Most negative of lambda_min(hess_u - alpha H) and lambda_min(beta H - hess_u)
  // over all probes; >= -tol when ok.
  double worst_violation = 0.0;
  // Largest relative gap between the analytic and finite-difference Hessian.
  double worst_fd_error = 0.0;
  int probes = 0;
};

// Probes points of domain + unit ball. claimed overrides the base loss's
// certificate (used to test that a wrong certificate is caught).
KappaReport verify_kappa_convexity(const AffineMemoryLoss& f, const ConvexSet& domain, int probes, double tol,
                                   Rng& rng, std::optional<Curvature> claimed = std::nullopt,
                                   double fd_tol = 1e-4);

// lambda_min(T_n^T T_n) for the block lower-triangular Toeplitz operator of
// the block sequence over horizon n.
double convolution_modulus_lower_bound(const std::vector<Matrix>& blocks, int n);

enum class BaseKind { kQuadratic, kPseudoHuber };

struct InstanceCertificate {
  double alpha = 1.0;
  double beta = 1.0;
  double kappa0 = 1.0;
  double g_f = 0.0;
  double diameter = 0.0;
  double r_h = 1.0;
  // max_t ||G_t||, ||Y_t||, ||H_t|| as generated (each <= 0.95 r_h).
  double measured_g = 0.0;
  double measured_y = 0.0;
  double measured_h = 0.0;
};

struct SyntheticBcomConfig {
  int d = 4;
  int m = 4;
  int horizon = 1024;
  double alpha = 0.5;
  double beta = 2.0;
  double r_h = 16.0;
  BaseKind kind = BaseKind::kPseudoHuber;
  // Drives the offset B_t; signal perturbations use a second channel.
  AdversarySchedule adversary;
  // Relative size of the per-step perturbation of the signal matrices.
  double signal_jitter = 0.2;
  // Distance of the planted target from the set centre, as a fraction of the radius.
  double target_fraction = 0.5;
  double set_radius = 1.0;
  std::uint64_t seed = 0;
};

struct BcomInstance {
  // losses[t-1] is f_t, t = 1..horizon.
  std::vector<AffineMemoryLoss> losses;
  ConvexSet set;
  InstanceCertificate cert;
  Vector target;
};

// Throws ConfigError on an infeasible configuration.
BcomInstance make_synthetic_bcom_instance(const SyntheticBcomConfig& config);

}  // namespace bcom
