#include "bcom/control.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "bcom/errors.hpp"

namespace bcom {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double op_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double condition_number(const Matrix& h) {
  Eigen::JacobiSVD<Matrix> svd(h);
  const Vector& s = svd.singularValues();
  return s(0) / s(s.size() - 1);
}

Matrix random_orthogonal(Index d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ();
}

Matrix random_with_norm(Index rows, Index cols, double norm, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  const double n = op_norm(g);
  return n > 0.0 ? Matrix(g * (norm / n)) : g;
}

void validate(const SystemConfig& c) {
  if (c.dx < 1) throw ConfigError("dx", "must be >= 1");
  if (c.du < 1) throw ConfigError("du", "must be >= 1");
  if (c.dy < 1) throw ConfigError("dy", "must be >= 1");
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) throw ConfigError("gamma", "must lie in (0, 1]");
  if (!(c.kappa >= 1.0)) throw ConfigError("kappa", "must be >= 1");
  if (!(c.kappa_sys > 0.0)) throw ConfigError("kappa_sys", "must be positive");
}

std::vector<Vector> signal_window(const std::vector<Vector>& signals, std::int64_t t, int m, Index dy) {
  std::vector<Vector> window;
  window.reserve(static_cast<std::size_t>(m));
  for (std::int64_t s = t - m + 1; s <= t; ++s) {
    window.push_back(s >= 1 ? signals[static_cast<std::size_t>(s - 1)] : Vector(Vector::Zero(dy)));
  }
  return window;
}

}  // namespace

StabilizableSystem system_from_parts(const Matrix& h, const Matrix& l, const Matrix& k, const Matrix& b,
                                     const Matrix& c, double kappa, double gamma, double kappa_sys) {
  if (h.rows() != h.cols() || l.rows() != h.rows() || l.cols() != h.cols()) {
    throw ShapeError("system_from_parts: H and L must be square of the state dimension");
  }
  if (b.rows() != h.rows() || c.cols() != h.rows() || k.rows() != b.cols() || k.cols() != c.rows()) {
    throw ShapeError("system_from_parts: B, C, K shapes are inconsistent");
  }
  StabilizableSystem sys;
  sys.instance.b = b;
  sys.instance.c = c;
  sys.instance.a = h * l * h.inverse() - b * k * c;
  sys.instance.x1 = Vector::Zero(h.rows());
  sys.instance.kappa_sys = kappa_sys;
  sys.controller = StabilizingController{k, h, l, kappa, gamma};
  verify_system(sys);
  return sys;
}

void verify_system(const StabilizableSystem& sys) {
  const LdsInstance& in = sys.instance;
  const StabilizingController& k = sys.controller;
  constexpr double kRel = 1e-12;
  const Matrix closed = in.a + in.b * k.k * in.c;
  const Matrix similar = k.h * k.l * k.h.inverse();
  if (max_abs(closed - similar) > 1e-9) throw ConstructionError("certificate: A + BKC != H L H^{-1}");
  const double slack = 1.0 + kRel;
  if (op_norm(k.k) > k.kappa * slack) throw ConstructionError("certificate: ||K|| > kappa");
  if (op_norm(k.h) > k.kappa * slack) throw ConstructionError("certificate: ||H|| > kappa");
  if (op_norm(k.h.inverse()) > k.kappa * slack) throw ConstructionError("certificate: ||H^{-1}|| > kappa");
  if (!(k.gamma > 0.0 && k.gamma <= 1.0)) throw ConstructionError("certificate: gamma outside (0, 1]");
  if (op_norm(k.l) > (1.0 - k.gamma) + kRel) throw ConstructionError("certificate: ||L|| > 1 - gamma");
  const double sys_norm = std::max({op_norm(in.a), op_norm(in.b), op_norm(in.c)});
  if (sys_norm > in.kappa_sys * slack) throw ConstructionError("certificate: system norm exceeds kappa_sys");
  if (in.x1.size() != in.dx()) throw ShapeError("certificate: x1 has the wrong dimension");
}

StabilizableSystem make_stabilizable_system(const SystemConfig& cfg) {
  validate(cfg);
  Rng rng = make_stream(cfg.seed, Stream::kInstance);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Index dx = cfg.dx;
  const double h_max = std::min(cfg.kappa, std::sqrt(static_cast<double>(dx)));
  double shrink = 1.0;
  for (int attempt = 0; attempt < 64; ++attempt) {
    Vector sv(dx);
    for (Index i = 0; i < dx; ++i) sv(i) = 1.0 + (h_max - 1.0) * unif(rng);
    const Matrix h = random_orthogonal(dx, rng) * sv.asDiagonal() * random_orthogonal(dx, rng).transpose();
    const Matrix l = random_with_norm(dx, dx, (1.0 - cfg.gamma) * (0.5 + 0.5 * unif(rng)), rng);
    const Matrix k = random_with_norm(cfg.du, cfg.dy, cfg.kappa * (0.1 + 0.4 * unif(rng)), rng);
    const Matrix b = random_with_norm(dx, cfg.du, shrink * cfg.kappa_sys * (0.3 + 0.6 * unif(rng)), rng);
    const Matrix c = random_with_norm(cfg.dy, dx, shrink * cfg.kappa_sys * (0.3 + 0.6 * unif(rng)), rng);
    const Matrix a = h * l * h.inverse() - b * k * c;
    if (op_norm(a) <= cfg.kappa_sys) return system_from_parts(h, l, k, b, c, cfg.kappa, cfg.gamma, cfg.kappa_sys);
    shrink *= 0.85;
  }
  throw ConstructionError("make_stabilizable_system: could not meet ||A|| <= kappa_sys");
}

Vector lds_step(const LdsInstance& inst, const Vector& x, const Vector& u, const Vector& w) {
  if (x.size() != inst.dx() || w.size() != inst.dx() || u.size() != inst.du()) throw ShapeError("lds_step: shape mismatch");
  return inst.a * x + inst.b * u + w;
}

Vector observe(const LdsInstance& inst, const Vector& x, const Vector& e) {
  if (x.size() != inst.dx() || e.size() != inst.dy()) throw ShapeError("observe: shape mismatch");
  return inst.c * x + e;
}

double closed_loop_constant(const StabilizableSystem& sys) {
  const double kappa = sys.controller.kappa;
  const double ks = sys.instance.kappa_sys;
  const double dx = static_cast<double>(sys.instance.dx());
  const double conj = std::max(std::sqrt(dx), condition_number(sys.controller.h));
  return std::sqrt(1.0 + kappa * kappa) * ks * ks * conj;
}

double markov_decay_bound(const StabilizableSystem& sys, int i) {
  return closed_loop_constant(sys) * std::pow(1.0 - sys.controller.gamma, i - 1);
}

double markov_tail_bound(const StabilizableSystem& sys, int n) {
  return closed_loop_constant(sys) * std::pow(1.0 - sys.controller.gamma, n) / sys.controller.gamma;
}

int truncation_length(const StabilizableSystem& sys, std::int64_t horizon) {
  const double t = static_cast<double>(std::max<std::int64_t>(horizon, 1));
  const double target = std::min(1e-10, 1.0 / (t * t));
  int n = 1;
  while (markov_tail_bound(sys, n) >= target) {
    ++n;
    if (n > 100000) throw ConstructionError("truncation_length: tail does not decay");
  }
  return n;
}

int default_memory(double gamma, std::int64_t horizon) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma", "must lie in (0, 1]");
  if (gamma >= 1.0 || horizon <= 1) return 1;
  const double m = std::ceil(std::log(static_cast<double>(horizon)) / std::log(1.0 / (1.0 - gamma)));
  return std::max(1, static_cast<int>(m));
}

MarkovOperator markov_operator(const StabilizableSystem& sys, int truncation) {
  if (truncation < 1) throw InvalidDimensionError("markov_operator: truncation must be >= 1");
  const LdsInstance& in = sys.instance;
  const Matrix& k = sys.controller.k;
  const Index dy = in.dy();
  const Index du = in.du();
  MarkovOperator op;
  op.truncation = truncation;
  op.dy = dy;
  op.du = du;
  op.blocks.reserve(static_cast<std::size_t>(truncation) + 1);
  Matrix g0 = Matrix::Zero(dy + du, du);
  g0.bottomRows(du).setIdentity();
  op.blocks.push_back(std::move(g0));
  const Matrix phi = in.a + in.b * k * in.c;
  Matrix power_b = in.b;
  for (int i = 1; i <= truncation; ++i) {
    Matrix g(dy + du, du);
    g.topRows(dy) = in.c * power_b;
    g.bottomRows(du) = k * g.topRows(dy);
    op.blocks.push_back(std::move(g));
    power_b = phi * power_b;
  }
  return op;
}

BlockList memory_blocks(const MarkovOperator& markov, int m) {
  if (m < 1 || static_cast<std::size_t>(m) > markov.blocks.size()) {
    throw InvalidDimensionError("memory_blocks: memory exceeds the Markov truncation");
  }
  return std::make_shared<const std::vector<Matrix>>(markov.blocks.begin(), markov.blocks.begin() + m);
}

Vector embed(const DrcPolicy& policy) {
  if (policy.blocks.empty()) throw ArityError("embed: empty policy");
  const Index du = policy.blocks[0].rows();
  const Index dy = policy.blocks[0].cols();
  const Index stride = du * dy;
  Vector out(policy.memory() * stride);
  for (int k = 0; k < policy.memory(); ++k) {
    const Matrix& b = policy.blocks[static_cast<std::size_t>(k)];
    if (b.rows() != du || b.cols() != dy) throw ShapeError("embed: blocks differ in shape");
    Eigen::Map<RowMajorMatrix>(out.data() + k * stride, du, dy) = b;
  }
  return out;
}

DrcPolicy unembed(const Vector& x, int m, Index du, Index dy) {
  if (x.size() != m * du * dy) throw ShapeError("unembed: length does not match m * du * dy");
  DrcPolicy p;
  for (int k = 0; k < m; ++k) p.blocks.emplace_back(Eigen::Map<const RowMajorMatrix>(x.data() + k * du * dy, du, dy));
  return p;
}

Matrix embed_signals(const std::vector<Vector>& window, Index du) {
  if (window.empty()) throw ArityError("embed_signals: empty window");
  const int m = static_cast<int>(window.size());
  const Index dy = window[0].size();
  Matrix y = Matrix::Zero(du, m * du * dy);
  for (int k = 0; k < m; ++k) {
    const Vector& s = window[static_cast<std::size_t>(m - 1 - k)];
    if (s.size() != dy) throw ShapeError("embed_signals: signals differ in dimension");
    for (Index i = 0; i < du; ++i) y.block(i, k * du * dy + i * dy, 1, dy) = s.transpose();
  }
  return y;
}

SignalReconstructor::SignalReconstructor(const MarkovOperator& markov) : markov_(&markov) {}

Vector SignalReconstructor::push_observation(const Vector& y) {
  if (corrections_.size() != signals_.size()) throw HistoryError("SignalReconstructor: missing correction for the previous step");
  if (y.size() != markov_->dy) throw ShapeError("SignalReconstructor: observation dimension mismatch");
  const std::size_t t = signals_.size() + 1;
  const std::size_t depth = std::min<std::size_t>(t - 1, static_cast<std::size_t>(markov_->truncation));
  Vector yk = y;
  for (std::size_t i = 1; i <= depth; ++i) {
    yk.noalias() -= markov_->blocks[i].topRows(markov_->dy) * corrections_[t - 1 - i];
  }
  signals_.push_back(yk);
  return yk;
}

void SignalReconstructor::push_correction(const Vector& a) {
  if (corrections_.size() + 1 != signals_.size()) throw HistoryError("SignalReconstructor: correction without observation");
  if (a.size() != markov_->du) throw ShapeError("SignalReconstructor: correction dimension mismatch");
  corrections_.push_back(a);
}

std::vector<Vector> counterfactual_signals(const std::vector<Vector>& observations,
                                           const std::vector<DrcPolicy>& policies, const MarkovOperator& markov) {
  const std::size_t horizon = observations.size();
  if (horizon == 0) return {};
  if (policies.size() + 1 < horizon) throw HistoryError("counterfactual_signals: fewer policies than steps");
  SignalReconstructor rec(markov);
  for (std::size_t t = 1; t <= horizon; ++t) {
    rec.push_observation(observations[t - 1]);
    if (t == horizon) break;
    const DrcPolicy& p = policies[t - 1];
    const int m = p.memory();
    const auto window = signal_window(rec.signals(), static_cast<std::int64_t>(t), m, markov.dy);
    rec.push_correction(embed_signals(window, markov.du) * embed(p));
  }
  return rec.signals();
}

BaseLoss CostSchedule::at(std::int64_t t) const {
  Vector u = Vector::Zero(dim);
  if (modulation.radius > 0.0) u = modulation.at(t, dim, 21) / modulation.radius;
  const Curvature cert{alpha, beta};
  if (kind == BaseKind::kQuadratic) {
    Vector w(dim);
    for (Index i = 0; i < dim; ++i) w(i) = alpha + (beta - alpha) * (0.5 + 0.5 * u(i));
    return BaseLoss::centered_quadratic(w.asDiagonal(), Vector::Zero(dim), cert);
  }
  const double s = (beta - alpha) * (0.5 + 0.5 * u(0));
  return BaseLoss::pseudo_huber(alpha, s, Vector::Zero(dim), beta);
}

Vector NoiseSchedule::w_at(std::int64_t t, Index dx) const { return w.at(t, dx, 31); }
Vector NoiseSchedule::e_at(std::int64_t t, Index dy) const { return e.at(t, dy, 32); }
double NoiseSchedule::radius() const { return std::max(w.radius, e.radius); }

ReductionConstants reduction_constants(const StabilizableSystem& sys, int m, double r_m, double g_c,
                                       double noise_radius) {
  const double kappa = sys.controller.kappa;
  const double gamma = sys.controller.gamma;
  const double ks = sys.instance.kappa_sys;
  const double dx = static_cast<double>(sys.instance.dx());
  const double du = static_cast<double>(sys.instance.du());
  const double dy = static_cast<double>(sys.instance.dy());
  const double md = static_cast<double>(m);
  const double conj = std::max(std::sqrt(dx), condition_number(sys.controller.h));

  ReductionConstants r;
  r.diameter = std::sqrt(md * std::max(du, dy)) * r_m;
  r.g_f = 4096.0 * std::sqrt(md) * g_c * noise_radius * noise_radius * r_m * r_m * std::pow(dx, 2.5) *
          std::pow(kappa, 3) * std::pow(ks, 8) / std::pow(gamma, 5);
  const double markov_sum = 1.0 + std::sqrt(dx * (1.0 + kappa * kappa)) * ks * ks / gamma;
  r.signal_radius = noise_radius * (1.0 + std::sqrt(dx) * ks / gamma);
  r.radius = r.signal_radius * (std::sqrt(1.0 + kappa * kappa) + 2.0 * r_m * markov_sum);
  const double markov_sum_full = 1.0 + closed_loop_constant(sys) / gamma;
  r.signal_radius_full = noise_radius * (1.0 + conj * ks * (1.0 + kappa * ks) / gamma);
  r.radius_full = r.signal_radius_full * (std::sqrt(1.0 + kappa * kappa) + 2.0 * r_m * markov_sum_full);
  r.cumulative_slack = g_c * md * dy * du * du * dx * kappa * kappa * std::pow(ks, 4) * r_m / (gamma * gamma);
  return r;
}

double certified_truncation_error(const StabilizableSystem& sys, int m, double r_m, double g_c, double noise_radius) {
  const ReductionConstants rc = reduction_constants(sys, m, r_m, g_c, noise_radius);
  const double correction = 2.0 * r_m * rc.signal_radius_full;
  return g_c * rc.radius_full * correction * markov_tail_bound(sys, m - 1);
}

AffineMemoryLoss reduce_to_bcom(const ReductionInput& in, const BaseLoss& cost) {
  if (in.signals == nullptr || in.k == nullptr || !in.blocks) throw HistoryError("reduce_to_bcom: incomplete input");
  if (in.discrepancy_budget && in.certified_truncation > *in.discrepancy_budget) {
    throw TruncationBudgetError(in.certified_truncation, *in.discrepancy_budget);
  }
  const std::vector<Vector>& signals = *in.signals;
  if (in.t < 1 || static_cast<std::size_t>(in.t) > signals.size()) throw HistoryError("reduce_to_bcom: signal history too short");
  if (static_cast<int>(in.blocks->size()) != in.m) throw ArityError("reduce_to_bcom: block count differs from m");
  const Vector& yk = signals[static_cast<std::size_t>(in.t - 1)];
  const Index dy = yk.size();
  const Index du = in.k->rows();
  Vector offset(dy + du);
  offset.head(dy) = yk;
  offset.tail(du) = (*in.k) * yk;
  std::vector<Matrix> ys;
  ys.reserve(static_cast<std::size_t>(in.m));
  for (int i = 0; i < in.m; ++i) ys.push_back(embed_signals(signal_window(signals, in.t - i, in.m, dy), du));
  return AffineMemoryLoss(cost, std::move(offset), in.blocks, std::move(ys));
}

ControlRun run_control(const StabilizableSystem& sys, const CostSchedule& costs, const NoiseSchedule& noise,
                       const ControlParams& params, int kappa_probes, int kappa_stride) {
  const LdsInstance& in = sys.instance;
  const Matrix& k = sys.controller.k;
  const int m = params.m;
  if (m < 1) throw ConfigError("m", "must be >= 1");
  if (!(params.r_m > 0.0)) throw ConfigError("r_m", "must be positive");
  if (params.horizon < 1) throw ConfigError("T", "must be >= 1");
  if (costs.dim != in.dy() + in.du()) throw ShapeError("run_control: cost dimension must be dy + du");
  const Index dy = in.dy();
  const Index du = in.du();

  ControlRun run;
  run.truncation = std::max(params.truncation > 0 ? params.truncation : truncation_length(sys, params.horizon), m - 1);
  run.truncation = std::max(run.truncation, 1);
  run.tail_bound = markov_tail_bound(sys, run.truncation);
  const MarkovOperator markov = markov_operator(sys, run.truncation);
  const BlockList blocks = memory_blocks(markov, m);

  const ReductionConstants rc = reduction_constants(sys, m, params.r_m, costs.g_c(), noise.radius());
  const ConvexSet set = params.set_kind == DecisionSetKind::kOperatorL1
                            ? ConvexSet::operator_l1_ball(m, static_cast<int>(du), static_cast<int>(dy), params.r_m)
                            : ConvexSet::ball(Vector::Zero(m * du * dy), rc.diameter);
  const double scale = params.a_init_scale > 0.0 ? params.a_init_scale : static_cast<double>(m);
  const BcoParams bp{params.eta, m, params.alpha, scale};
  Rng bernoulli = make_stream(params.seed, Stream::kBernoulli);
  Rng sphere = make_stream(params.seed, Stream::kSphere);
  Rng probe = make_stream(params.seed, Stream::kProbe);
  BcomState state = init_bcom_state(set, bp, bernoulli, sphere);

  ReductionInput red;
  red.blocks = blocks;
  red.k = &k;
  red.m = m;
  red.discrepancy_budget = params.discrepancy_budget;
  red.certified_truncation = certified_truncation_error(sys, m, params.r_m, costs.g_c(), noise.radius());

  SignalReconstructor recon(markov);
  red.signals = &recon.signals();
  const Index dim = m * du * dy;
  const Vector zero = Vector::Zero(dim);
  Vector x = in.x1;
  const std::size_t n = static_cast<std::size_t>(params.horizon);
  run.y.reserve(n);
  run.u.reserve(n);
  run.cost.reserve(n);
  run.played.reserve(n);
  for (std::int64_t t = 1; t <= params.horizon; ++t) {
    const Vector y = observe(in, x, noise.e_at(t, dy));
    recon.push_observation(y);
    const Vector& z = t >= m ? state.z : zero;
    const Matrix ymat = embed_signals(signal_window(recon.signals(), t, m, dy), du);
    const Vector a = ymat * z;
    const Vector u = k * y + a;
    const BaseLoss c_t = costs.at(t);
    Vector yu(dy + du);
    yu << y, u;
    const double cost = c_t.eval(yu);
    recon.push_correction(a);
    x = lds_step(in, x, u, noise.w_at(t, in.dx()));

    run.y.push_back(y);
    run.u.push_back(u);
    run.cost.push_back(cost);
    run.played.push_back(z);
    run.max_yu_norm = std::max(run.max_yu_norm, yu.norm());
    run.max_played_norm = std::max(run.max_played_norm, operator_l1_norm(z, m, static_cast<int>(du), static_cast<int>(dy)));

    if (t < m) {
      run.updated.push_back(false);
      run.logdet.push_back(state.logdet_a);
      continue;
    }
    red.t = t;
    const AffineMemoryLoss f = reduce_to_bcom(red, c_t);
    const std::vector<Vector> window(run.played.end() - m, run.played.end());
    const double disc = std::abs(cost - f.eval(window));
    const double g_norm = op_norm(f.g_t());
    run.r_h = std::max({run.r_h, g_norm, g_norm * g_norm, op_norm(f.signals()[0])});
    run.discrepancy.push_back(disc);
    run.cumulative_discrepancy += disc;
    if (kappa_probes > 0 && (t - m) % std::max(1, kappa_stride) == 0) {
      if (!verify_kappa_convexity(f, set, kappa_probes, 1e-8, probe).ok) ++run.kappa_checks_failed;
    }
    const StepRecord rec = bcoam_step(state, set, cost, f.h_t(), bp, bernoulli, sphere);
    run.max_bias_proxy =
        std::max(run.max_bias_proxy, disc * static_cast<double>(dim) * std::sqrt(state.a_factor.max_eigenvalue()));
    run.updated.push_back(rec.updated);
    run.logdet.push_back(state.logdet_a);
    if (rec.updated) {
      run.update_set.push_back(t);
      run.records.push_back(rec);
    }
  }
  run.signals = recon.signals();
  return run;
}

std::vector<Vector> simulate_pure_k(const StabilizableSystem& sys, const NoiseSchedule& noise, std::int64_t horizon) {
  const LdsInstance& in = sys.instance;
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(horizon, 0)));
  Vector x = in.x1;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    const Vector y = observe(in, x, noise.e_at(t, in.dy()));
    out.push_back(y);
    x = lds_step(in, x, sys.controller.k * y, noise.w_at(t, in.dx()));
  }
  return out;
}

std::vector<double> comparator_costs(const StabilizableSystem& sys, const CostSchedule& costs,
                                     const NoiseSchedule& noise, const DrcPolicy& policy, std::int64_t horizon) {
  const LdsInstance& in = sys.instance;
  const Index dy = in.dy();
  const Index du = in.du();
  const int m = policy.memory();
  const std::vector<Vector> yk = simulate_pure_k(sys, noise, horizon);
  std::vector<double> out;
  out.reserve(yk.size());
  Vector x = in.x1;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    const Vector y = observe(in, x, noise.e_at(t, dy));
    Vector a = Vector::Zero(du);
    for (int j = 0; j < m && t - j >= 1; ++j) a += policy.blocks[static_cast<std::size_t>(j)] * yk[static_cast<std::size_t>(t - j - 1)];
    const Vector u = sys.controller.k * y + a;
    Vector yu(dy + du);
    yu << y, u;
    out.push_back(costs.at(t).eval(yu));
    x = lds_step(in, x, u, noise.w_at(t, in.dx()));
  }
  return out;
}

double comparator_cost(const StabilizableSystem& sys, const CostSchedule& costs, const NoiseSchedule& noise,
                       const DrcPolicy& policy, std::int64_t horizon) {
  double total = 0.0;
  for (double c : comparator_costs(sys, costs, noise, policy, horizon)) total += c;
  return total;
}

ReconstructionOracle reconstruction_oracle(const StabilizableSystem& sys, const NoiseSchedule& noise,
                                           std::int64_t horizon, int m, double r_m, std::uint64_t seed) {
  const LdsInstance& in = sys.instance;
  const Index dy = in.dy();
  const Index du = in.du();
  ReconstructionOracle out;
  out.truncation = truncation_length(sys, horizon);
  out.tail_bound = markov_tail_bound(sys, out.truncation);
  const MarkovOperator markov = markov_operator(sys, out.truncation);
  const ConvexSet set = ConvexSet::operator_l1_ball(m, static_cast<int>(du), static_cast<int>(dy), r_m);
  Rng rng = make_stream(seed, Stream::kProbe);
  SignalReconstructor recon(markov);
  Vector x = in.x1;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    const Vector y = observe(in, x, noise.e_at(t, dy));
    recon.push_observation(y);
    const Vector a = embed_signals(signal_window(recon.signals(), t, m, dy), du) * set.sample(rng);
    recon.push_correction(a);
    x = lds_step(in, x, sys.controller.k * y + a, noise.w_at(t, in.dx()));
  }
  const std::vector<Vector> truth = simulate_pure_k(sys, noise, horizon);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    out.max_gap = std::max(out.max_gap, (truth[i] - recon.signals()[i]).norm());
  }
  return out;
}

}  // namespace bcom
