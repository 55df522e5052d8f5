// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   bcom_acceptance [--out DIR] [--config-dir DIR]
//
// Criteria 1-8 are evaluated on a first pass. Criterion 9 repeats every
// artifact-producing step single-threaded and compares bytes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "bcom/bco.hpp"
#include "bcom/control.hpp"
#include "bcom/harness.hpp"
#include "bcom/losses.hpp"
#include "bcom_cli/app.hpp"
#include "bcom_cli/config.hpp"
#include "bcom_cli/csv.hpp"

namespace {

using namespace bcom;
using cli::Artifacts;
using cli::format_number;
using nlohmann::json;

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Pass {
  std::vector<Outcome> outcomes;  // criteria 1-8
  std::vector<double> seconds;
  Artifacts files;
};

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string metrics_csv(const std::vector<std::pair<std::string, double>>& rows) {
  std::string out = "metric,value\n";
  for (const auto& [k, v] : rows) out += k + "," + format_number(v) + "\n";
  return out;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

NoiseSchedule bounded_noise(std::uint64_t seed, double radius) {
  NoiseSchedule n;
  n.w = {ScheduleKind::kSeededBounded, radius, 64.0, keyed_rng(seed, {1})()};
  n.e = {ScheduleKind::kSeededBounded, radius, 64.0, keyed_rng(seed, {2})()};
  return n;
}

// 1. Counterfactual signal reconstruction under random DRC play.
Outcome signal_reconstruction(Artifacts& files) {
  const auto t0 = std::chrono::steady_clock::now();
  const StabilizableSystem sys = make_stabilizable_system({3, 2, 2, 3.0, 0.3, 2.0, 101});
  const int m = default_memory(0.3, 500);
  const ReconstructionOracle r = reconstruction_oracle(sys, bounded_noise(101, 0.5), 500, m, 1.0, 101);
  const double secs = since(t0);
  files["c1_reconstruction.csv"] =
      metrics_csv({{"max_gap", r.max_gap}, {"truncation", r.truncation}, {"tail_bound", r.tail_bound}, {"m", m}});
  const bool ok = r.max_gap <= 1e-8 && r.tail_bound < 1e-10 && secs < 10.0;
  return {ok, "max gap " + fmt(r.max_gap) + " (<= 1e-8), truncation " + std::to_string(r.truncation) + ", tail " +
                  fmt(r.tail_bound) + " (< 1e-10), " + fmt(secs) + " s (< 10)"};
}

// 2. One-point estimator mean against the exact and smoothed gradients.
Outcome estimator_moments(Artifacts& files) {
  const auto t0 = std::chrono::steady_clock::now();
  Vector o(2);
  o << 1.0, 0.0;
  const UnaryFunction quad{[](const Vector& x) { return 0.5 * x.squaredNorm(); }, [](const Vector& x) { return x; }};
  Rng rng_q = make_stream(202, Stream::kProbe);
  const EstimatorReport q = estimator_mean_check(quad, o, PsdMatrix::identity(2), 1000000, rng_q);

  Vector center(2);
  center << 0.4, -0.3;
  const BaseLoss ph = BaseLoss::pseudo_huber(0.5, 1.5, center);
  const UnaryFunction huber{[&ph](const Vector& x) { return ph.eval(x); }, [&ph](const Vector& x) { return ph.grad(x); }};
  Rng rng_h = make_stream(203, Stream::kProbe);
  const EstimatorReport h = estimator_mean_check(huber, o, PsdMatrix::identity(2), 1000000, rng_h);
  const double secs = since(t0);
  files["c2_estimator.csv"] = metrics_csv({{"quadratic_z_exact", q.z_exact},
                                           {"quadratic_gap_exact", q.gap_exact},
                                           {"huber_z_smoothed", h.z_smoothed},
                                           {"huber_gap_smoothed", h.gap_smoothed},
                                           {"huber_gap_exact", h.gap_exact}});
  const bool ok = q.z_exact <= 3.0 && h.z_smoothed <= 3.0 && secs < 30.0;
  return {ok, "quadratic |mean - (1,0)| = " + fmt(q.z_exact) + " sigma, pseudo-Huber vs smoothed = " +
                  fmt(h.z_smoothed) + " sigma (both <= 3), bias vs exact gradient " + fmt(h.gap_exact) + ", " +
                  fmt(secs) + " s (< 30)"};
}

// 3. kappa sandwich on generated and control-reduced losses.
Outcome kappa_sandwich(Artifacts& files) {
  int bcom_losses = 0;
  int bcom_failed = 0;
  double worst_fd = 0.0;
  for (int k = 0; k < 25; ++k) {
    SyntheticBcomConfig c;
    c.horizon = 40;
    c.seed = 300 + static_cast<std::uint64_t>(k);
    c.kind = k % 2 == 0 ? BaseKind::kPseudoHuber : BaseKind::kQuadratic;
    const BcomInstance inst = make_synthetic_bcom_instance(c);
    Rng rng = make_stream(c.seed, Stream::kProbe);
    for (const AffineMemoryLoss& f : inst.losses) {
      const KappaReport r = verify_kappa_convexity(f, inst.set, 200, 1e-8, rng, std::nullopt, 1e-4);
      ++bcom_losses;
      bcom_failed += r.ok ? 0 : 1;
      worst_fd = std::max(worst_fd, r.worst_fd_error);
    }
  }
  int control_losses = 0;
  int control_failed = 0;
  for (int k = 0; k < 25; ++k) {
    const std::uint64_t seed = 400 + static_cast<std::uint64_t>(k);
    const StabilizableSystem sys = make_stabilizable_system({2, 1, 1, 2.0, 0.5, 2.0, seed});
    CostSchedule costs;
    costs.kind = k % 2 == 0 ? BaseKind::kQuadratic : BaseKind::kPseudoHuber;
    costs.alpha = 0.5;
    costs.beta = 2.0;
    costs.dim = 2;
    costs.modulation.seed = seed;
    ControlParams p;
    p.m = 4;
    p.horizon = 60;
    p.eta = 1.0 / std::sqrt(60.0);
    p.alpha = 0.5;
    p.seed = seed;
    const ControlRun run = run_control(sys, costs, bounded_noise(seed, 0.5), p, 200, 1);
    control_losses += static_cast<int>(p.horizon) - p.m + 1;
    control_failed += run.kappa_checks_failed;
  }
  files["c3_kappa.csv"] = metrics_csv({{"bcom_losses", bcom_losses},
                                       {"bcom_failed", bcom_failed},
                                       {"control_losses", control_losses},
                                       {"control_failed", control_failed},
                                       {"worst_fd_error", worst_fd}});
  const bool ok = bcom_failed == 0 && control_failed == 0;
  return {ok, std::to_string(bcom_failed) + "/" + std::to_string(bcom_losses) + " BCO-M losses and " +
                  std::to_string(control_failed) + "/" + std::to_string(control_losses) +
                  " control-reduced losses failed over 50 instances, worst finite-difference gap " + fmt(worst_fd)};
}

// 4. Update cadence of the occasional-update learner.
Outcome update_cadence(Artifacts& files) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::int64_t steps = 100000;
  const int m = 4;
  const int d = 4;
  const ConvexSet set = ConvexSet::ball(Vector::Zero(d), 1.0);
  const BcoParams p{1.0 / std::sqrt(static_cast<double>(steps)), m, 1.0, 1.0};
  Rng bernoulli = make_stream(404, Stream::kBernoulli);
  Rng sphere = make_stream(404, Stream::kSphere);
  BcomState s = init_bcom_state(set, p, bernoulli, sphere);
  const Vector target = Vector::Constant(d, 0.25);
  const PsdMatrix h = PsdMatrix::identity(d);
  std::vector<std::int64_t> updates;
  for (std::int64_t t = 1; t <= steps; ++t) {
    const double f = 0.5 * (s.z - target).squaredNorm();
    if (bcoam_step(s, set, f, h, p, bernoulli, sphere).updated) updates.push_back(t);
  }
  std::int64_t min_gap = steps;
  for (std::size_t k = 1; k < updates.size(); ++k) min_gap = std::min(min_gap, updates[k] - updates[k - 1]);
  const double pr = 27.0 / 256.0;
  const double freq = static_cast<double>(updates.size()) / static_cast<double>(steps);
  const double sigma = std::sqrt(pr * (1.0 - pr) / static_cast<double>(steps));
  const double secs = since(t0);
  files["c4_cadence.csv"] =
      metrics_csv({{"updates", static_cast<double>(updates.size())}, {"frequency", freq}, {"min_gap", min_gap}});
  const bool ok = std::abs(freq - pr) <= 3.0 * sigma && min_gap >= m &&
                  static_cast<std::int64_t>(updates.size()) <= steps / m && secs < 10.0;
  return {ok, "frequency " + fmt(freq) + " vs 27/256 = " + fmt(pr) + " (" + fmt(std::abs(freq - pr) / sigma) +
                  " binomial sigma, <= 3), min gap " + std::to_string(min_gap) + " (>= 4), |S| = " +
                  std::to_string(updates.size()) + " (<= " + std::to_string(steps / m) + "), " + fmt(secs) +
                  " s (< 10)"};
}

Matrix random_metric(Index d, Rng& rng, double lo, double hi) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  Matrix g(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = n(rng);
  const Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ();
  Vector lambda(d);
  for (Index i = 0; i < d; ++i) lambda(i) = std::exp(u(rng));
  const Matrix a = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

ConvexSet random_set(Index d, int kind, Rng& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::uniform_real_distribution<double> r(0.3, 2.0);
  switch (kind) {
    case 0: {
      Vector c(d);
      for (Index i = 0; i < d; ++i) c(i) = u(rng);
      return ConvexSet::ball(c, r(rng));
    }
    case 1: {
      Vector lo(d);
      Vector hi(d);
      for (Index i = 0; i < d; ++i) {
        lo(i) = u(rng) - r(rng) / 2.0;
        hi(i) = lo(i) + r(rng);
      }
      return ConvexSet::box(lo, hi);
    }
    default: {
      // d = memory * du * dy with du = 1.
      const int memory = d % 2 == 0 ? 2 : 1;
      return ConvexSet::operator_l1_ball(memory, 1, static_cast<int>(d) / memory, r(rng));
    }
  }
}

// Bounding box of a 2-D set for the grid search.
std::pair<Vector, Vector> bounds_2d(const ConvexSet& set) {
  if (const auto* b = std::get_if<EuclideanBall>(&set.shape())) {
    return {b->center.array() - b->radius, b->center.array() + b->radius};
  }
  if (const auto* b = std::get_if<Box>(&set.shape())) return {b->lower, b->upper};
  const double r = std::get<OperatorL1Ball>(set.shape()).radius;
  return {Vector::Constant(2, -r), Vector::Constant(2, r)};
}

// Disk (center, radius) if the 2-D set is round, so that grid points outside it
// can be pulled radially onto the boundary circle.
std::optional<std::pair<Vector, double>> disk_2d(const ConvexSet& set) {
  if (const auto* b = std::get_if<EuclideanBall>(&set.shape())) return std::pair{b->center, b->radius};
  const auto* l = std::get_if<OperatorL1Ball>(&set.shape());
  if (l != nullptr && l->memory == 1) return std::pair{Vector(Vector::Zero(2)), l->radius};
  return std::nullopt;
}

// Grid minimiser of (x-p)^T A (x-p) over the set, refined around the best
// point until the spacing is below 1e-7.
Vector grid_minimizer(const ConvexSet& set, const Matrix& a, const Vector& p) {
  auto [lo, hi] = bounds_2d(set);
  const auto disk = disk_2d(set);
  int n = 400;
  Vector best = set.center();
  double best_value = (best - p).dot(a * (best - p));
  for (;;) {
    const Vector h = (hi - lo) / n;
    Vector x(2);
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) {
        x << lo(0) + i * h(0), lo(1) + j * h(1);
        if (disk && (x - disk->first).norm() > disk->second) {
          x = disk->first + disk->second * (x - disk->first).normalized();
        }
        if (!set.contains(x, 1e-12)) continue;
        const double v = (x - p).dot(a * (x - p));
        if (v < best_value) {
          best_value = v;
          best = x;
        }
      }
    }
    if (h.maxCoeff() < 1e-7) return best;
    lo = best - 20.0 * h;
    hi = best + 20.0 * h;
    n = 160;
  }
}

// 5. Metric projections: variational inequality and 2-D brute force.
Outcome projection_correctness(Artifacts& files) {
  Rng rng = make_stream(505, Stream::kProbe);
  std::uniform_int_distribution<int> dim(2, 6);
  std::normal_distribution<double> n(0.0, 1.5);
  int vi_failures = 0;
  int membership_failures = 0;
  int grid_cases = 0;
  int grid_failures = 0;
  double worst_vi = 0.0;
  double worst_grid = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Index d = k % 3 == 0 ? 2 : dim(rng);
    const ConvexSet set = random_set(d, (k / 3) % 3, rng);
    const bool two_d = d == 2;
    // Brute force is only resolving for moderate conditioning.
    const Matrix a = two_d ? random_metric(d, rng, 0.1, 10.0) : random_metric(d, rng, 1e-3, 10.0);
    Vector p(d);
    for (Index i = 0; i < d; ++i) p(i) = n(rng);
    const Vector x = mahalanobis_project(set, a, p);
    if (!set.contains(x, 1e-7)) ++membership_failures;
    double vi = 0.0;
    for (int j = 0; j < 100; ++j) vi = std::min(vi, (a * (x - p)).dot(set.sample(rng) - x));
    worst_vi = std::min(worst_vi, vi);
    if (vi < -1e-7) ++vi_failures;
    if (two_d) {
      ++grid_cases;
      const double gap = (grid_minimizer(set, a, p) - x).norm();
      worst_grid = std::max(worst_grid, gap);
      if (gap > 1e-3) ++grid_failures;
    }
  }
  files["c5_projection.csv"] = metrics_csv({{"vi_failures", vi_failures},
                                            {"membership_failures", membership_failures},
                                            {"worst_vi", worst_vi},
                                            {"grid_cases", grid_cases},
                                            {"grid_failures", grid_failures},
                                            {"worst_grid_gap", worst_grid}});
  const bool ok = vi_failures == 0 && membership_failures == 0 && grid_failures == 0;
  return {ok, "1000 triples: " + std::to_string(vi_failures) + " variational-inequality failures (worst " +
                  fmt(worst_vi) + ", tol 1e-7), " + std::to_string(membership_failures) + " outside the set; " +
                  std::to_string(grid_cases) + " 2-D grid checks, worst gap " + fmt(worst_grid) + " (<= 1e-3)"};
}

struct SweepOutcome {
  SweepResult result;
  double seconds = 0.0;
};

SweepOutcome run_sweep_config(const std::string& path, const std::string& prefix, int jobs, Artifacts& files) {
  cli::ExperimentConfig cfg = cli::load_config(path);
  if (jobs > 0) cfg.jobs = jobs;
  cli::rehash(cfg);
  SweepOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  for (auto& [name, body] : cli::sweep_artifacts(cfg, std::nullopt, &out.result)) files[prefix + name] = body;
  out.seconds = since(t0);
  return out;
}

const ArmSummary& arm_summary(const SweepResult& r, Arm arm) {
  for (const ArmSummary& a : r.arms)
    if (a.arm == arm) return a;
  throw Error("sweep has no " + to_string(arm) + " arm");
}

std::string ci(const LogLogFit& f) { return "[" + fmt(f.ci_low) + ", " + fmt(f.ci_high) + "]"; }

// Single runs at the sweep configs' own horizon; their bounds count toward 8.
bool single_runs(const std::string& dir, Artifacts& files, std::string& detail) {
  bool ok = true;
  int runs = 0;
  for (const char* name : {"bcom_scaling.json", "control_scaling.json"}) {
    const cli::ExperimentConfig cfg = cli::load_config(dir + "/" + name);
    const std::string family = to_string(cfg.family);
    const Artifacts a = family == "bcom" ? cli::bcom_artifacts(cfg) : cli::control_artifacts(cfg);
    for (const auto& [file, body] : a) {
      files["single_" + family + "/" + file] = body;
      if (file.size() < 13 || file.compare(file.size() - 12, 12, "summary.json") != 0) continue;
      const json s = json::parse(body);
      const auto check = [&](const json& run) {
        ++runs;
        ok = ok && run["bounds"]["within_bound"].get<bool>();
      };
      if (s.contains("runs")) {
        for (const json& r : s["runs"]) check(r);
      } else {
        check(s);
      }
    }
  }
  detail = std::to_string(runs) + " single runs";
  return ok;
}

Pass run_pass(const std::string& config_dir, int jobs, bool verbose) {
  Pass pass;
  const auto timed = [&](auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = fn();
    pass.outcomes.push_back(std::move(o));
    pass.seconds.push_back(since(t0));
    if (verbose) std::cerr << "  criterion " << pass.outcomes.size() << " evaluated in " << pass.seconds.back() << " s\n";
  };
  timed([&] { return signal_reconstruction(pass.files); });
  timed([&] { return estimator_moments(pass.files); });
  timed([&] { return kappa_sandwich(pass.files); });
  timed([&] { return update_cadence(pass.files); });
  timed([&] { return projection_correctness(pass.files); });

  SweepOutcome bcom;
  timed([&] {
    bcom = run_sweep_config(config_dir + "/bcom_scaling.json", "c6/", jobs, pass.files);
    const ArmSummary& newton = arm_summary(bcom.result, Arm::kNewton);
    std::string detail = "newton slope " + fmt(newton.fit.slope) + " CI95 " + ci(newton.fit) + " (<= 0.62)";
    bool ok = newton.fit.slope <= 0.62 && bcom.seconds < 20.0 * 60.0;
    for (const ArmSummary& a : bcom.result.arms) {
      if (a.arm != Arm::kSpherical) continue;
      detail += "; spherical slope " + fmt(a.fit.slope) + " CI95 " + ci(a.fit) +
                (a.fit.slope > newton.fit.slope ? " (above newton)" : " (not above newton; reported only)");
    }
    detail += "; " + fmt(bcom.seconds) + " s";
    return Outcome{ok, detail};
  });

  SweepOutcome control;
  timed([&] {
    control = run_sweep_config(config_dir + "/control_scaling.json", "c7/", jobs, pass.files);
    const ArmSummary& newton = arm_summary(control.result, Arm::kNewton);
    int within_slack = 0;
    double worst = 0.0;
    for (const SweepCell& c : control.result.cells) {
      within_slack += c.cumulative_discrepancy <= c.discrepancy_slack ? 1 : 0;
      if (c.discrepancy_slack > 0.0) worst = std::max(worst, c.cumulative_discrepancy / c.discrepancy_slack);
    }
    const int cells = static_cast<int>(control.result.cells.size());
    const bool ok = newton.fit.slope <= 0.65 && within_slack == cells && control.seconds < 30.0 * 60.0;
    return Outcome{ok, "slope " + fmt(newton.fit.slope) + " CI95 " + ci(newton.fit) + " (<= 0.65); discrepancy within slack in " +
                           std::to_string(within_slack) + "/" + std::to_string(cells) + " cells (max ratio " +
                           fmt(worst) + "); " + fmt(control.seconds) + " s"};
  });

  timed([&] {
    int cells = 0;
    int within = 0;
    double worst = 0.0;
    for (const SweepResult* r : {&bcom.result, &control.result}) {
      for (const SweepCell& c : r->cells) {
        ++cells;
        within += c.bounds.within_bound ? 1 : 0;
        worst = std::max(worst, c.bounds.measured / c.bounds.reduction_bound);
      }
    }
    std::string singles;
    const bool singles_ok = single_runs(config_dir, pass.files, singles);
    return Outcome{within == cells && singles_ok, std::to_string(within) + "/" + std::to_string(cells) +
                                                      " sweep cells within the bound (max regret/bound " + fmt(worst) +
                                                      "), " + singles + (singles_ok ? " within" : " NOT all within")};
  });
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  std::string out_dir = "acceptance_out";
  std::string config_dir = BCOM_CONFIG_DIR;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if ((arg == "--out" || arg == "--config-dir") && i + 1 < argc) {
      (arg == "--out" ? out_dir : config_dir) = argv[++i];
    } else {
      std::cerr << "usage: bcom_acceptance [--out DIR] [--config-dir DIR]\n";
      return 2;
    }
  }

  const char* names[] = {"signal reconstruction", "estimator moments", "kappa sandwich",
                         "update cadence",        "projection",        "BCO-M scaling",
                         "control scaling",       "bound sanity",      "determinism"};
  try {
    std::cerr << "pass 1 (configured thread count)\n";
    const Pass first = run_pass(config_dir, 0, true);
    cli::write_artifacts(out_dir, {});
    for (const auto& [name, body] : first.files) {
      std::filesystem::create_directories(std::filesystem::path(out_dir) / std::filesystem::path(name).parent_path());
      cli::write_file((std::filesystem::path(out_dir) / name).string(), body);
    }
    std::cerr << "pass 2 (single thread)\n";
    const Pass second = run_pass(config_dir, 1, true);

    std::vector<std::string> differing;
    for (const auto& [name, body] : first.files) {
      const auto it = second.files.find(name);
      if (it == second.files.end() || it->second != body) differing.push_back(name);
    }
    if (second.files.size() != first.files.size()) differing.push_back("(file set)");

    int failed = 0;
    for (std::size_t i = 0; i < first.outcomes.size(); ++i) {
      const Outcome& o = first.outcomes[i];
      std::printf("criterion %zu %-22s %s  %s\n", i + 1, names[i], o.passed ? "PASS" : "FAIL", o.detail.c_str());
      failed += o.passed ? 0 : 1;
    }
    std::string detail = std::to_string(first.files.size()) + " artifacts compared across two passes, " +
                         std::to_string(differing.size()) + " differ";
    for (const std::string& d : differing) detail += " " + d;
    std::printf("criterion 9 %-22s %s  %s\n", names[8], differing.empty() ? "PASS" : "FAIL", detail.c_str());
    failed += differing.empty() ? 0 : 1;
    std::printf("%d/9 criteria passed\n", 9 - failed);
    return failed == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 3;
  }
}
