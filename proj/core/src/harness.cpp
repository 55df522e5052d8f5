#include "bcom/harness.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "bcom/errors.hpp"

namespace bcom {

namespace {

std::vector<Vector> window_ending(const std::vector<Vector>& signals, std::int64_t t, int m, Index dy) {
  std::vector<Vector> window;
  window.reserve(static_cast<std::size_t>(m));
  for (std::int64_t s = t - m + 1; s <= t; ++s) {
    window.push_back(s >= 1 ? signals[static_cast<std::size_t>(s - 1)] : Vector(Vector::Zero(dy)));
  }
  return window;
}

void check_objective(const AffineSumObjective& obj) {
  if (obj.losses.size() != obj.offsets.size() || obj.losses.size() != obj.maps.size()) {
    throw ArityError("AffineSumObjective: losses, offsets and maps differ in length");
  }
  if (obj.losses.empty()) throw ArityError("AffineSumObjective: empty objective");
}

double average_value(const AffineSumObjective& obj, const Vector& x) {
  return obj.value(x) / static_cast<double>(obj.size());
}

Vector average_gradient(const AffineSumObjective& obj, const Vector& x) {
  return obj.gradient(x) / static_cast<double>(obj.size());
}

}  // namespace

double AffineSumObjective::term(std::size_t k, const Vector& x) const {
  return losses[k].eval(offsets[k] + maps[k] * x);
}

double AffineSumObjective::value(const Vector& x) const {
  double total = 0.0;
  for (std::size_t k = 0; k < size(); ++k) total += term(k, x);
  return total;
}

Vector AffineSumObjective::gradient(const Vector& x) const {
  Vector g = Vector::Zero(dim());
  for (std::size_t k = 0; k < size(); ++k) g.noalias() += maps[k].transpose() * losses[k].grad(offsets[k] + maps[k] * x);
  return g;
}

Matrix AffineSumObjective::hessian(const Vector& x) const {
  Matrix h = Matrix::Zero(dim(), dim());
  for (std::size_t k = 0; k < size(); ++k) {
    h.noalias() += maps[k].transpose() * losses[k].hess(offsets[k] + maps[k] * x) * maps[k];
  }
  return h;
}

std::vector<double> AffineSumObjective::terms(const Vector& x) const {
  std::vector<double> out(size());
  for (std::size_t k = 0; k < size(); ++k) out[k] = term(k, x);
  return out;
}

AffineSumObjective bcom_objective(const std::vector<AffineMemoryLoss>& losses, int first_t) {
  if (first_t < 1) throw ConfigError("first_t", "must be >= 1");
  AffineSumObjective obj;
  for (std::size_t t = static_cast<std::size_t>(first_t); t <= losses.size(); ++t) {
    const AffineMemoryLoss& f = losses[t - 1];
    obj.losses.push_back(f.base());
    obj.offsets.push_back(f.offset());
    obj.maps.push_back(f.g_t());
  }
  return obj;
}

AffineSumObjective control_objective(const StabilizableSystem& sys, const CostSchedule& costs,
                                     const NoiseSchedule& noise, int m, std::int64_t horizon) {
  if (m < 1) throw ConfigError("m", "must be >= 1");
  const LdsInstance& in = sys.instance;
  const Matrix& k = sys.controller.k;
  const Index dy = in.dy();
  const Index du = in.du();
  const Index dim = m * du * dy;
  const Matrix phi = in.a + in.b * k * in.c;
  const std::vector<Vector> yk = simulate_pure_k(sys, noise, horizon);

  // x_t(M) - x_t(K) = xi_t e(M), xi_1 = 0, xi_{t+1} = phi xi_t + B Y_t.
  AffineSumObjective obj;
  Matrix xi = Matrix::Zero(in.dx(), dim);
  for (std::int64_t t = 1; t <= horizon; ++t) {
    const Vector& y = yk[static_cast<std::size_t>(t - 1)];
    const Matrix ymat = embed_signals(window_ending(yk, t, m, dy), du);
    const Matrix cxi = in.c * xi;
    Matrix map(dy + du, dim);
    map.topRows(dy) = cxi;
    map.bottomRows(du) = k * cxi + ymat;
    Vector offset(dy + du);
    offset << y, k * y;
    obj.losses.push_back(costs.at(t));
    obj.offsets.push_back(std::move(offset));
    obj.maps.push_back(std::move(map));
    xi = phi * xi + in.b * ymat;
  }
  return obj;
}

ComparatorResult best_fixed_comparator(const AffineSumObjective& objective, const ConvexSet& set, double tol,
                                       int max_iterations, int probes, std::uint64_t probe_seed) {
  check_objective(objective);
  if (objective.dim() != set.dimension()) throw ShapeError("best_fixed_comparator: set and objective dimensions differ");
  if (!(tol > 0.0)) throw ConfigError("tol", "must be positive");

  const double n = static_cast<double>(objective.size());
  Vector x = set.euclidean_project(set.center());
  double fx = average_value(objective, x);
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < max_iterations; ++it) {
    const Vector g = average_gradient(objective, x);
    Matrix h = objective.hessian(x) / n;
    const SpectralFactor spectrum{PsdMatrix(0.5 * (h + h.transpose()))};
    const double lipschitz = std::max(spectrum.max_eigenvalue(), 1e-12);
    // Gradient mapping with step 1/L.
    residual = lipschitz * (x - set.euclidean_project(x - g / lipschitz)).norm();
    if (residual < tol) break;
    h.diagonal().array() += 1e-12 * lipschitz;
    const SpectralFactor metric{PsdMatrix(0.5 * (h + h.transpose()))};
    const Vector target = set.euclidean_project(mahalanobis_project(set, metric, x - metric.apply_power(-1.0, g)));
    const Vector dir = target - x;
    const double slope = g.dot(dir);
    // Below this the decrease is not resolved by function values, and the
    // full Newton step is taken unchecked.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(fx));
    double s = 1.0;
    Vector next = target;
    double fnext = average_value(objective, next);
    if (-slope > noise) {
      while (fnext > fx + 1e-4 * s * slope + noise && s > 1e-10) {
        s *= 0.5;
        next = x + s * dir;
        fnext = average_value(objective, next);
      }
    }
    if ((next - x).norm() == 0.0) break;
    x = std::move(next);
    fx = fnext;
  }
  if (!(residual < tol)) throw ComparatorNotConvergedError("best_fixed_comparator", residual);

  ComparatorResult result;
  result.x = x;
  result.iterations = it;
  result.residual = residual;
  const double avg = average_value(objective, x);
  Rng rng = make_stream(probe_seed, Stream::kProbe);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = std::max(set.diameter(), 1e-12);
  for (int p = 0; p < probes; ++p) {
    Vector probe;
    if (p % 2 == 0) {
      probe = set.sample(rng);
    } else {
      Vector dir(x.size());
      for (Index i = 0; i < dir.size(); ++i) dir(i) = normal(rng);
      const double radius = scale * std::pow(10.0, -1.0 - 5.0 * (p % 10) / 10.0);
      probe = set.euclidean_project(x + radius * dir / std::max(dir.norm(), 1e-300));
    }
    result.worst_probe_gain = std::max(result.worst_probe_gain, avg - average_value(objective, probe));
  }
  if (result.worst_probe_gain > tol) {
    throw ComparatorNotConvergedError("best_fixed_comparator: probe improved on the result", result.worst_probe_gain);
  }
  result.value = objective.value(x);
  return result;
}

RegretRecord compute_regret(const std::vector<double>& incurred, const std::vector<double>& comparator, int first_t) {
  if (incurred.size() != comparator.size()) {
    std::ostringstream msg;
    msg << "incurred has " << incurred.size() << " steps, comparator has " << comparator.size();
    throw HorizonMismatchError(msg.str());
  }
  RegretRecord rec;
  rec.first_t = first_t;
  rec.incurred = incurred;
  rec.comparator = comparator;
  rec.cumulative.resize(incurred.size());
  double running = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < incurred.size(); ++i) {
    running += incurred[i] - comparator[i];
    total += comparator[i];
    rec.cumulative[i] = running;
  }
  rec.comparator_value = total;
  return rec;
}

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y, double confidence) {
  if (x.size() != y.size()) throw ArityError("fit_loglog: x and y differ in length");
  if (x.size() < 2) throw Error("fit_loglog: need at least two points");
  const std::size_t n = x.size();
  std::vector<double> lx(n);
  std::vector<double> ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error("fit_loglog: inputs must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw Error("fit_loglog: x values are all equal");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  fit.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    fit.residuals[i] = ly[i] - (fit.intercept + fit.slope * lx[i]);
    sse += fit.residuals[i] * fit.residuals[i];
  }
  fit.ci_low = fit.ci_high = fit.slope;
  if (n > 2) {
    fit.slope_se = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    boost::math::students_t dist(static_cast<double>(n - 2));
    const double q = boost::math::quantile(dist, 0.5 + 0.5 * confidence);
    fit.ci_low = fit.slope - q * fit.slope_se;
    fit.ci_high = fit.slope + q * fit.slope_se;
  }
  return fit;
}

double base_regret_bound(double beta, int d, double eta, double alpha, double r_h, double horizon, int d0, double g,
                         double diameter) {
  const double dd = static_cast<double>(d);
  const double d0d = static_cast<double>(d0);
  return (2.0 * beta * dd / (eta * alpha)) * std::log(eta * r_h * horizon + 1.0) + 2.0 * d0d * g * diameter +
         diameter * diameter * d0d * r_h / (2.0 * eta) + 3.0 * eta * d0d * dd * dd * g * g * diameter * diameter * r_h * horizon;
}

double moving_cost_bound(const BoundInputs& in) {
  const double m4 = std::pow(static_cast<double>(in.m), 4);
  const double m2 = static_cast<double>(in.m) * in.m;
  const double d = static_cast<double>(in.d);
  const double t = static_cast<double>(in.horizon);
  const double sqrt_t = std::sqrt(t);
  const double ea = in.eta * in.alpha;
  const double r3 = in.r_h * in.r_h * in.r_h;
  return 12.0 * m4 * in.beta * in.r_h * d * std::max(2.0, ea * in.r_h * sqrt_t) / (ea * in.modulus) *
             std::log(in.eta * in.r_h * t + 1.0) +
         10.0 * m4 * in.beta * r3 * d * sqrt_t / in.modulus + m2 * in.beta * d * r3 * sqrt_t +
         in.eta * d * in.g * in.diameter * in.diameter * in.beta * t;
}

BoundReport bound_diagnostics(double measured, const BoundInputs& in, std::int64_t updates, std::int64_t steps) {
  BoundReport r;
  r.measured = measured;
  const double m = static_cast<double>(in.m);
  r.reduction_bound = 3.0 * m *
                      base_regret_bound(in.beta, in.d, in.eta, in.alpha, in.r_h, static_cast<double>(in.horizon) / m,
                                        2, in.g, in.diameter);
  r.moving_cost = in.modulus > 0.0 ? moving_cost_bound(in) : std::numeric_limits<double>::infinity();
  r.full_bound = r.reduction_bound + r.moving_cost;
  r.within_bound = measured <= r.reduction_bound;
  r.updates = updates;
  r.steps = steps;
  if (steps > 0) {
    // Updates are occurrences of the pattern 0^{m-1}1, which has no
    // self-overlap; the renewal CLT gives Var(count) ~ steps (p - (2m-1) p^2).
    const double p = (1.0 / m) * std::pow(1.0 - 1.0 / m, m - 1.0);
    r.frequency = static_cast<double>(updates) / static_cast<double>(steps);
    r.expected_frequency = p;
    r.frequency_sigma = std::sqrt(std::max(0.0, p - (2.0 * m - 1.0) * p * p) / static_cast<double>(steps));
    // The first m-1 steps of a run cannot yet complete a pattern from fresh
    // draws, which shifts the count by at most one.
    const double slack = 1.0 / static_cast<double>(steps);
    r.frequency_within_3sigma = std::abs(r.frequency - p) <= 3.0 * r.frequency_sigma + slack;
  }
  return r;
}

std::string to_string(Arm arm) { return arm == Arm::kNewton ? "newton" : "spherical"; }

Arm arm_from_string(const std::string& name) {
  if (name == "newton") return Arm::kNewton;
  if (name == "spherical") return Arm::kSpherical;
  throw ConfigError("arm", "unknown arm '" + name + "'");
}

namespace {

std::vector<TraceRow> make_trace(const RegretRecord& rec, const std::vector<bool>& updated,
                                 const std::vector<double>& logdet) {
  std::vector<TraceRow> rows(rec.incurred.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].t = rec.first_t + static_cast<std::int64_t>(i);
    rows[i].loss = rec.incurred[i];
    rows[i].comparator_loss = rec.comparator[i];
    rows[i].cum_regret = rec.cumulative[i];
    rows[i].updated = i < updated.size() && updated[i];
    rows[i].logdet = i < logdet.size() ? logdet[i] : 0.0;
  }
  return rows;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

ExperimentResult run_bcom_experiment(const BcomExperimentConfig& config, std::int64_t horizon, std::uint64_t seed,
                                     Arm arm) {
  if (horizon < 1) throw ConfigError("T", "must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  SyntheticBcomConfig ic = config.instance;
  ic.horizon = static_cast<int>(horizon);
  ic.seed = seed;
  const BcomInstance inst = make_synthetic_bcom_instance(ic);
  const int m = ic.m;
  const double sqrt_t = std::sqrt(static_cast<double>(horizon));

  ExperimentResult out;
  out.m = m;
  out.d = ic.d;
  BcoRun run;
  if (arm == Arm::kNewton) {
    out.eta = config.c_eta / sqrt_t;
    run = run_bcoam(inst.losses, inst.set, RunParams{out.eta, m, inst.cert.alpha, config.a_init_scale, seed});
  } else {
    const double t = static_cast<double>(horizon);
    out.eta = config.c_eta_spherical * std::pow(t, -2.0 / 3.0);
    const double delta = std::min(1.0, config.c_delta * std::pow(t, -1.0 / 6.0));
    run = run_spherical_baseline(inst.losses, inst.set, SphericalParams{out.eta, delta, m, seed});
  }

  const AffineSumObjective obj = bcom_objective(inst.losses, run.first_t);
  out.comparator = best_fixed_comparator(obj, inst.set, config.comparator_tol, 500, config.comparator_probes, seed);
  out.record = compute_regret(run.incurred, obj.terms(out.comparator.x), run.first_t);
  out.record.comparator_label = "best_fixed_point";
  out.record.seed = seed;
  out.record.cert = inst.cert;
  out.update_set = run.trace.update_set;
  out.trace = make_trace(out.record, run.updated, run.logdet);

  std::vector<Matrix> blocks = inst.losses.back().blocks();
  BoundInputs bi;
  bi.alpha = inst.cert.alpha;
  bi.beta = inst.cert.beta;
  bi.g = inst.cert.g_f;
  bi.diameter = inst.cert.diameter;
  bi.r_h = inst.cert.r_h;
  bi.eta = arm == Arm::kNewton ? out.eta : config.c_eta / sqrt_t;
  bi.d = ic.d;
  bi.m = m;
  bi.horizon = horizon;
  bi.modulus = convolution_modulus_lower_bound(blocks, 4 * m);
  out.bounds = bound_diagnostics(out.record.final_regret(), bi, static_cast<std::int64_t>(out.update_set.size()),
                                 static_cast<std::int64_t>(run.incurred.size()));
  out.record.wall_clock_seconds = seconds_since(start);
  return out;
}

ExperimentResult run_control_experiment(const ControlExperimentConfig& config, std::int64_t horizon,
                                        std::uint64_t seed) {
  if (horizon < 1) throw ConfigError("T", "must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const StabilizableSystem sys = make_stabilizable_system(config.system);
  const int m = config.m > 0 ? config.m : default_memory(config.system.gamma, horizon);

  // The system is fixed by the config; the cell seed drives the schedules and
  // the learner.
  CostSchedule costs = config.costs;
  NoiseSchedule noise = config.noise;
  costs.modulation.seed = keyed_rng(seed, {static_cast<std::uint64_t>(Stream::kCost)})();
  noise.w.seed = keyed_rng(seed, {static_cast<std::uint64_t>(Stream::kNoise), 0})();
  noise.e.seed = keyed_rng(seed, {static_cast<std::uint64_t>(Stream::kNoise), 1})();

  ControlParams cp;
  cp.m = m;
  cp.r_m = config.r_m;
  cp.eta = config.c_eta / std::sqrt(static_cast<double>(horizon));
  cp.horizon = horizon;
  cp.alpha = costs.alpha;
  cp.seed = seed;
  cp.a_init_scale = config.a_init_scale;
  cp.set_kind = config.set_kind;
  ControlRun run = run_control(sys, costs, noise, cp, config.kappa_probes, config.kappa_stride);

  const Index du = sys.instance.du();
  const Index dy = sys.instance.dy();
  ExperimentResult out;
  out.m = m;
  out.d = static_cast<int>(m * du * dy);
  out.eta = cp.eta;
  out.reduction = reduction_constants(sys, m, config.r_m, costs.g_c(), noise.radius());
  const ConvexSet set = config.set_kind == DecisionSetKind::kOperatorL1
                            ? ConvexSet::operator_l1_ball(m, static_cast<int>(du), static_cast<int>(dy), config.r_m)
                            : ConvexSet::ball(Vector::Zero(out.d), out.reduction.diameter);
  const AffineSumObjective obj = control_objective(sys, costs, noise, m, horizon);
  out.comparator = best_fixed_comparator(obj, set, config.comparator_tol, 500, config.comparator_probes, seed);
  out.record = compute_regret(run.cost, obj.terms(out.comparator.x), 1);
  out.record.comparator_label = "best_fixed_drc";
  out.record.seed = seed;
  out.update_set = run.update_set;
  out.trace = make_trace(out.record, run.updated, run.logdet);

  const MarkovOperator markov = markov_operator(sys, std::max(m, 1));
  std::vector<Matrix> blocks(markov.blocks.begin(), markov.blocks.begin() + m);
  BoundInputs bi;
  bi.alpha = costs.alpha;
  bi.beta = costs.beta;
  bi.g = out.reduction.g_f;
  bi.diameter = out.reduction.diameter;
  bi.r_h = run.r_h;
  bi.eta = cp.eta;
  bi.d = out.d;
  bi.m = m;
  bi.horizon = horizon;
  bi.modulus = convolution_modulus_lower_bound(blocks, 4 * m);
  InstanceCertificate cert;
  cert.alpha = bi.alpha;
  cert.beta = bi.beta;
  cert.kappa0 = bi.beta / bi.alpha;
  cert.g_f = bi.g;
  cert.diameter = bi.diameter;
  cert.r_h = bi.r_h;
  out.record.cert = cert;
  const std::int64_t steps = horizon - m + 1;
  out.bounds = bound_diagnostics(out.record.final_regret(), bi, static_cast<std::int64_t>(run.update_set.size()),
                                 std::max<std::int64_t>(steps, 0));
  out.control = std::move(run);
  out.record.wall_clock_seconds = seconds_since(start);
  return out;
}

SweepResult scaling_sweep(const SweepConfig& config, const CellRunner& runner) {
  if (config.horizons.size() < 4) throw ConfigError("horizons", "need at least 4 grid points");
  if (config.seeds < 5) throw ConfigError("seeds", "need at least 5 seeds per horizon");
  if (config.arms.empty()) throw ConfigError("arms", "need at least one arm");
  struct Key {
    Arm arm;
    std::int64_t horizon;
    std::uint64_t seed;
  };
  std::vector<Key> keys;
  for (Arm arm : config.arms)
    for (std::int64_t t : config.horizons)
      for (int s = 0; s < config.seeds; ++s) keys.push_back({arm, t, config.base_seed + static_cast<std::uint64_t>(s)});

  std::vector<SweepCell> cells(keys.size());
  std::vector<std::exception_ptr> errors(keys.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  const auto worker = [&] {
    for (std::size_t i = next++; i < keys.size() && !failed; i = next++) {
      try {
        cells[i] = runner(keys[i].horizon, keys[i].seed, keys[i].arm);
        cells[i].horizon = keys[i].horizon;
        cells[i].seed = keys[i].seed;
        cells[i].arm = keys[i].arm;
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(keys.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (!errors[i]) continue;
    std::ostringstream msg;
    msg << "sweep cell (arm=" << to_string(keys[i].arm) << ", T=" << keys[i].horizon << ", seed=" << keys[i].seed
        << ") failed: ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      msg << e.what();
    } catch (...) {
      msg << "unknown error";
    }
    throw Error(msg.str());
  }

  SweepResult result;
  result.cells = std::move(cells);
  const std::size_t per_arm = config.horizons.size() * static_cast<std::size_t>(config.seeds);
  for (std::size_t a = 0; a < config.arms.size(); ++a) {
    ArmSummary summary;
    summary.arm = config.arms[a];
    for (std::size_t h = 0; h < config.horizons.size(); ++h) {
      const std::size_t base = a * per_arm + h * static_cast<std::size_t>(config.seeds);
      double sum = 0.0;
      for (int s = 0; s < config.seeds; ++s) sum += result.cells[base + static_cast<std::size_t>(s)].final_regret;
      const double mean = sum / config.seeds;
      double ss = 0.0;
      for (int s = 0; s < config.seeds; ++s) {
        const double dev = result.cells[base + static_cast<std::size_t>(s)].final_regret - mean;
        ss += dev * dev;
      }
      summary.horizons.push_back(static_cast<double>(config.horizons[h]));
      summary.mean.push_back(mean);
      summary.standard_error.push_back(std::sqrt(ss / (config.seeds - 1) / config.seeds));
    }
    bool positive = std::all_of(summary.mean.begin(), summary.mean.end(), [](double v) { return v > 0.0; });
    if (positive) summary.fit = fit_loglog(summary.horizons, summary.mean);
    result.arms.push_back(std::move(summary));
  }
  return result;
}

}  // namespace bcom
