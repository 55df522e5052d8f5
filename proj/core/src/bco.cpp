#include "bcom/bco.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "bcom/errors.hpp"

namespace bcom {

namespace {

double metric_floor(double scale) { return scale * (1.0 - 1e-9); }

void check_params(double eta, int m, double alpha, double scale) {
  if (!(eta >= 0.0)) throw ConfigError("eta", "must be >= 0");
  if (m < 1) throw ConfigError("m", "must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("alpha", "must be positive");
  if (!(scale > 0.0)) throw ConfigError("a_init_scale", "must be positive");
}

int fold_bernoulli(int zeros_run, bool b, int m) { return b ? 0 : std::min(zeros_run + 1, m); }

struct Welford {
  explicit Welford(Index d) : mean(Vector::Zero(d)), m2(Vector::Zero(d)) {}
  void add(const Vector& x) {
    ++n;
    const Vector delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta.cwiseProduct(x - mean);
  }
  Vector standard_error() const {
    return (m2 / static_cast<double>(n - 1) / static_cast<double>(n)).cwiseSqrt();
  }
  std::int64_t n = 0;
  Vector mean;
  Vector m2;
};

}  // namespace

bool draw_bernoulli(Rng& bernoulli, int m) {
  std::bernoulli_distribution coin(1.0 / static_cast<double>(m));
  return coin(bernoulli);
}

BcomState init_bcom_state(const ConvexSet& set, const BcoParams& params, Rng& bernoulli, Rng& sphere) {
  check_params(params.eta, params.m, params.alpha, params.a_init_scale);
  const Index d = set.dimension();
  BcomState s;
  s.t = params.m;
  s.o = set.center();
  s.a_hat = PsdMatrix::identity(d, params.a_init_scale);
  s.a_factor = SpectralFactor(s.a_hat);
  s.a_inv_sqrt = s.a_factor.inv_sqrt(metric_floor(params.a_init_scale));
  s.logdet_a = static_cast<double>(d) * std::log(params.a_init_scale);
  s.g_prev = Vector::Zero(d);
  s.o_fixed_event = ++s.events;
  s.v = sample_unit_sphere(d, sphere).v;
  s.v_sampled_event = ++s.events;
  s.z = s.o + s.a_inv_sqrt * s.v;
  for (int i = 1; i < params.m; ++i) s.zeros_run = fold_bernoulli(s.zeros_run, draw_bernoulli(bernoulli, params.m), params.m);
  return s;
}

StepRecord bcoam_step(BcomState& s, const ConvexSet& set, double f_value, const PsdMatrix& h, const BcoParams& params,
                      bool b_t, Rng& sphere) {
  const Index d = s.o.size();
  if (h.dim() != d) throw ShapeError("bcoam_step: H_t dimension mismatch");
  StepRecord rec;
  rec.t = s.t;
  const bool fire = b_t && s.zeros_run >= params.m - 1;
  s.zeros_run = fold_bernoulli(s.zeros_run, b_t, params.m);
  ++s.t;
  if (!fire) {
    rec.logdet_a = s.logdet_a;
    return rec;
  }

  rec.updated = true;
  rec.prev_o_fixed_event = s.o_fixed_event;
  rec.v_sampled_event = s.v_sampled_event;
  const Vector g_new = static_cast<double>(d) * f_value * s.a_factor.apply_power(0.5, s.v);

  // The projection uses the metric and gradient of the previous epoch.
  if (s.epoch > 0) {
    const Vector target = s.o - params.eta * s.a_factor.apply_power(-1.0, s.g_prev);
    Vector next = mahalanobis_project(set, s.a_factor, target);
    rec.step_norm = (next - s.o).norm();
    s.o = std::move(next);
  }
  s.o_fixed_event = ++s.events;

  const PsdMatrix a_new = s.a_hat.plus_scaled(h, 0.5 * params.eta * params.alpha);
  {
    const Matrix rel = s.a_inv_sqrt * a_new.matrix() * s.a_inv_sqrt;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (rel + rel.transpose()), Eigen::EigenvaluesOnly);
    rec.metric_ratio = eig.eigenvalues().maxCoeff();
  }
  s.a_hat = a_new;
  s.a_factor = SpectralFactor(s.a_hat);
  s.a_inv_sqrt = s.a_factor.inv_sqrt(metric_floor(params.a_init_scale));
  s.logdet_a = s.a_factor.logdet();
  rec.logdet_a = s.logdet_a;
  rec.grad_dual_norm = std::sqrt(std::max(0.0, g_new.dot(s.a_factor.apply_power(-1.0, g_new))));
  s.g_prev = g_new;
  ++s.epoch;

  s.v = sample_unit_sphere(d, sphere).v;
  s.v_sampled_event = ++s.events;
  s.z = s.o + s.a_inv_sqrt * s.v;
  return rec;
}

StepRecord bcoam_step(BcomState& state, const ConvexSet& set, double f_value, const PsdMatrix& h,
                      const BcoParams& params, Rng& bernoulli, Rng& sphere) {
  const bool b = draw_bernoulli(bernoulli, params.m);
  return bcoam_step(state, set, f_value, h, params, b, sphere);
}

DelayState init_delay_state(const ConvexSet& set, const DelayParams& params, Rng& sphere) {
  check_params(params.eta, 1, params.alpha, params.a_init_scale);
  if (params.d0 < 1) throw ConfigError("d0", "must be >= 1");
  const Index d = set.dimension();
  DelayState s;
  s.o = set.center();
  s.a_hat = PsdMatrix::identity(d, params.a_init_scale);
  s.a_factor = SpectralFactor(s.a_hat);
  s.v = sample_unit_sphere(d, sphere).v;
  s.z = s.o + s.a_factor.inv_sqrt(metric_floor(params.a_init_scale)) * s.v;
  s.last_gradient = Vector::Zero(d);
  return s;
}

StepRecord bco_delay_step(DelayState& s, const ConvexSet& set, double f_value, const PsdMatrix& h,
                          const DelayParams& params, Rng& sphere) {
  const Index d = s.o.size();
  if (h.dim() != d) throw ShapeError("bco_delay_step: H_t dimension mismatch");
  StepRecord rec;
  rec.t = s.t;
  rec.updated = true;
  Vector g = static_cast<double>(d) * f_value * s.a_factor.apply_power(0.5, s.v);
  const PsdMatrix a_new = s.a_hat.plus_scaled(h, 0.5 * params.eta * params.alpha);
  SpectralFactor f_new(a_new);
  rec.grad_dual_norm = std::sqrt(std::max(0.0, g.dot(f_new.apply_power(-1.0, g))));
  s.last_gradient = g;
  s.history.emplace_back(f_new, std::move(g));
  while (static_cast<int>(s.history.size()) > params.d0) s.history.pop_front();

  // Referenced epoch t - d0 + 1 <= 0 carries no metric yet: keep o.
  if (s.t - params.d0 + 1 >= 1) {
    const auto& [metric, grad] = s.history.front();
    const Vector target = s.o - params.eta * metric.apply_power(-1.0, grad);
    Vector next = mahalanobis_project(set, metric, target);
    rec.step_norm = (next - s.o).norm();
    s.o = std::move(next);
  }
  s.a_hat = a_new;
  s.a_factor = std::move(f_new);
  rec.logdet_a = s.a_factor.logdet();
  s.v = sample_unit_sphere(d, sphere).v;
  s.z = s.o + s.a_factor.inv_sqrt(metric_floor(params.a_init_scale)) * s.v;
  ++s.t;
  return rec;
}

namespace {

void check_losses(const std::vector<AffineMemoryLoss>& losses, const ConvexSet& set, int m) {
  for (const AffineMemoryLoss& f : losses) {
    if (f.d() != set.dimension()) throw ShapeError("run: loss dimension does not match the decision set");
    if (f.memory() != m) throw ArityError("run: loss memory does not match m");
  }
}

std::vector<Vector> window_at(const std::vector<Vector>& decisions, std::int64_t t, int m) {
  return std::vector<Vector>(decisions.begin() + (t - m), decisions.begin() + t);
}

}  // namespace

BcoRun run_bcoam(const std::vector<AffineMemoryLoss>& losses, const ConvexSet& set, const RunParams& params) {
  check_losses(losses, set, params.m);
  const std::int64_t horizon = static_cast<std::int64_t>(losses.size());
  const int m = params.m;
  Rng bernoulli = make_stream(params.seed, Stream::kBernoulli);
  Rng sphere = make_stream(params.seed, Stream::kSphere);
  const BcoParams bp{params.eta, m, params.alpha, params.a_init_scale};
  BcomState state = init_bcom_state(set, bp, bernoulli, sphere);

  BcoRun run;
  run.first_t = m;
  run.decisions.assign(static_cast<std::size_t>(std::min<std::int64_t>(m, horizon)), state.z);
  for (std::int64_t t = m; t <= horizon; ++t) {
    const AffineMemoryLoss& f = losses[static_cast<std::size_t>(t - 1)];
    const double value = f.eval(window_at(run.decisions, t, m));
    StepRecord rec = bcoam_step(state, set, value, f.h_t(), bp, bernoulli, sphere);
    run.incurred.push_back(value);
    run.o_norm.push_back(state.o.norm());
    run.logdet.push_back(state.logdet_a);
    run.updated.push_back(rec.updated);
    if (rec.updated) {
      run.trace.update_set.push_back(t);
      run.trace.records.push_back(rec);
    }
    if (t < horizon) run.decisions.push_back(state.z);
  }
  return run;
}

BcoRun run_spherical_baseline(const std::vector<AffineMemoryLoss>& losses, const ConvexSet& set,
                              const SphericalParams& params) {
  check_losses(losses, set, params.m);
  if (!(params.delta > 0.0 && params.delta <= 1.0)) throw ConfigError("delta", "must lie in (0, 1]");
  if (!(params.eta >= 0.0)) throw ConfigError("eta", "must be >= 0");
  const std::int64_t horizon = static_cast<std::int64_t>(losses.size());
  const int m = params.m;
  const Index d = set.dimension();
  Rng bernoulli = make_stream(params.seed, Stream::kBernoulli);
  Rng sphere = make_stream(params.seed, Stream::kSphere);

  Vector o = set.center();
  Vector v = sample_unit_sphere(d, sphere).v;
  Vector z = o + params.delta * v;
  int zeros_run = 0;
  for (int i = 1; i < m; ++i) zeros_run = fold_bernoulli(zeros_run, draw_bernoulli(bernoulli, m), m);
  const double logdet = -2.0 * static_cast<double>(d) * std::log(params.delta);

  BcoRun run;
  run.first_t = m;
  run.decisions.assign(static_cast<std::size_t>(std::min<std::int64_t>(m, horizon)), z);
  for (std::int64_t t = m; t <= horizon; ++t) {
    const AffineMemoryLoss& f = losses[static_cast<std::size_t>(t - 1)];
    const double value = f.eval(window_at(run.decisions, t, m));
    const bool b = draw_bernoulli(bernoulli, m);
    const bool fire = b && zeros_run >= m - 1;
    zeros_run = fold_bernoulli(zeros_run, b, m);
    StepRecord rec;
    rec.t = t;
    rec.logdet_a = logdet;
    if (fire) {
      rec.updated = true;
      const Vector g = (static_cast<double>(d) / params.delta) * value * v;
      Vector next = set.euclidean_project(o - params.eta * g);
      rec.step_norm = (next - o).norm();
      o = std::move(next);
      v = sample_unit_sphere(d, sphere).v;
      z = o + params.delta * v;
      run.trace.update_set.push_back(t);
      run.trace.records.push_back(rec);
    }
    run.incurred.push_back(value);
    run.o_norm.push_back(o.norm());
    run.logdet.push_back(logdet);
    run.updated.push_back(rec.updated);
    if (t < horizon) run.decisions.push_back(z);
  }
  return run;
}

EstimatorReport estimator_mean_check(const UnaryFunction& f, const Vector& o, const PsdMatrix& a, int n_samples,
                                     Rng& rng) {
  if (n_samples < 2) throw InvalidDimensionError("estimator_mean_check: need at least two samples");
  const Index d = o.size();
  if (a.dim() != d) throw ShapeError("estimator_mean_check: metric dimension mismatch");
  const SpectralFactor factor(a);
  if (!(factor.min_eigenvalue() > 0.0)) throw InvalidMetricError("estimator_mean_check: metric must be positive definite");
  const Matrix root = factor.sqrt();
  const Matrix inv_root = factor.power(-0.5);

  Welford estimator(d);
  for (int k = 0; k < n_samples; ++k) {
    const Vector v = sample_unit_sphere(d, rng).v;
    estimator.add(static_cast<double>(d) * f.eval(o + inv_root * v) * (root * v));
  }
  Welford smoothed(d);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int k = 0; k < n_samples; ++k) {
    const Vector dir = sample_unit_sphere(d, rng).v;
    const Vector u = std::pow(unif(rng), 1.0 / static_cast<double>(d)) * dir;
    smoothed.add(f.grad(o + inv_root * u));
  }

  EstimatorReport r;
  r.empirical_mean = estimator.mean;
  r.empirical_se = estimator.standard_error();
  r.smoothed_gradient = smoothed.mean;
  r.smoothed_se = smoothed.standard_error();
  r.exact_gradient = f.grad(o);
  const Vector diff = r.empirical_mean - r.smoothed_gradient;
  const Vector diff_exact = r.empirical_mean - r.exact_gradient;
  r.gap_smoothed = diff.norm();
  r.gap_exact = diff_exact.norm();
  for (Index i = 0; i < d; ++i) {
    const double se = std::sqrt(r.empirical_se(i) * r.empirical_se(i) + r.smoothed_se(i) * r.smoothed_se(i));
    r.z_smoothed = std::max(r.z_smoothed, se > 0.0 ? std::abs(diff(i)) / se : (diff(i) == 0.0 ? 0.0 : INFINITY));
    const double se_e = r.empirical_se(i);
    r.z_exact = std::max(r.z_exact, se_e > 0.0 ? std::abs(diff_exact(i)) / se_e : (diff_exact(i) == 0.0 ? 0.0 : INFINITY));
  }
  return r;
}

}  // namespace bcom
