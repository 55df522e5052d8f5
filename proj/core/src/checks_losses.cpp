#include <cmath>
#include <random>
#include <sstream>

#include "bcom/bco.hpp"
#include "bcom/checks.hpp"
#include "bcom/losses.hpp"

namespace bcom {

namespace {

SyntheticBcomConfig small_config(std::uint64_t seed, BaseKind kind) {
  SyntheticBcomConfig c;
  c.d = 3;
  c.m = 3;
  c.horizon = 40;
  c.kind = kind;
  c.seed = seed;
  return c;
}

// A point of set + unit ball.
Vector probe_point(const ConvexSet& set, Rng& rng) {
  const Index d = set.dimension();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double r = std::pow(unif(rng), 1.0 / static_cast<double>(d));
  return set.sample(rng) + r * sample_unit_sphere(d, rng).v;
}

std::vector<Vector> probe_window(const ConvexSet& set, int m, Rng& rng) {
  std::vector<Vector> w;
  for (int i = 0; i < m; ++i) w.push_back(probe_point(set, rng));
  return w;
}

CheckOutcome gradient_fd(std::uint64_t seed) {
  Rng rng = keyed_rng(seed, {201});
  double worst = 0.0;
  for (BaseKind kind : {BaseKind::kQuadratic, BaseKind::kPseudoHuber}) {
    const BcomInstance inst = make_synthetic_bcom_instance(small_config(seed, kind));
    for (int k = 0; k < 100; ++k) {
      const AffineMemoryLoss& f = inst.losses[static_cast<std::size_t>(k) % inst.losses.size()];
      std::vector<Vector> w = probe_window(inst.set, f.memory(), rng);
      const std::vector<Vector> g = f.grad(w);
      double gnorm = 0.0;
      for (const Vector& gi : g) gnorm += gi.squaredNorm();
      gnorm = std::sqrt(gnorm);
      double err = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        for (Index j = 0; j < w[i].size(); ++j) {
          const double h = 1e-5;
          const double x0 = w[i](j);
          w[i](j) = x0 + h;
          const double fp = f.eval(w);
          w[i](j) = x0 - h;
          const double fm = f.eval(w);
          w[i](j) = x0;
          const double fd = (fp - fm) / (2.0 * h);
          err = std::max(err, std::abs(fd - g[i](j)));
        }
      }
      worst = std::max(worst, err / std::max(1.0, gnorm));
    }
  }
  std::ostringstream os;
  os << "max relative gradient error = " << worst;
  return {worst <= 1e-5, os.str()};
}

CheckOutcome unary_consistency(std::uint64_t seed) {
  Rng rng = keyed_rng(seed, {202});
  int exact_failures = 0;
  double worst_unrolled = 0.0;
  for (BaseKind kind : {BaseKind::kQuadratic, BaseKind::kPseudoHuber}) {
    const BcomInstance inst = make_synthetic_bcom_instance(small_config(seed, kind));
    for (const AffineMemoryLoss& f : inst.losses) {
      const Vector z = probe_point(inst.set, rng);
      const std::vector<Vector> w(static_cast<std::size_t>(f.memory()), z);
      const double u = f.eval_u(z);
      if (u != f.eval(w)) ++exact_failures;
      worst_unrolled = std::max(worst_unrolled, std::abs(u - f.eval_unrolled(w)) / std::max(1.0, std::abs(u)));
    }
  }
  std::ostringstream os;
  os << "eval_u != eval on constant window: " << exact_failures << ", max unrolled gap = " << worst_unrolled;
  return {exact_failures == 0 && worst_unrolled <= 1e-12, os.str()};
}

CheckOutcome gradient_bound(std::uint64_t seed) {
  Rng rng = keyed_rng(seed, {203});
  double worst_ratio = 0.0;
  double worst_unary_ratio = 0.0;
  for (BaseKind kind : {BaseKind::kQuadratic, BaseKind::kPseudoHuber}) {
    const BcomInstance inst = make_synthetic_bcom_instance(small_config(seed, kind));
    const double g_f = inst.cert.g_f;
    for (const AffineMemoryLoss& f : inst.losses) {
      for (int k = 0; k < 5; ++k) {
        const std::vector<Vector> w = probe_window(inst.set, f.memory(), rng);
        double n2 = 0.0;
        for (const Vector& gi : f.grad(w)) n2 += gi.squaredNorm();
        worst_ratio = std::max(worst_ratio, std::sqrt(n2) / g_f);
        const Vector z = probe_point(inst.set, rng);
        worst_unary_ratio =
            std::max(worst_unary_ratio, f.grad_u(z).norm() / (g_f * std::sqrt(static_cast<double>(f.memory()))));
      }
    }
  }
  std::ostringstream os;
  os << "max |grad f|/G_f = " << worst_ratio << ", max |grad f_unary|/(G_f sqrt m) = " << worst_unary_ratio;
  return {worst_ratio <= 1.0 && worst_unary_ratio <= 1.0, os.str()};
}

CheckOutcome kappa_sandwich(std::uint64_t seed) {
  Rng rng = keyed_rng(seed, {204});
  int failures = 0;
  int total = 0;
  double worst = 0.0;
  for (BaseKind kind : {BaseKind::kQuadratic, BaseKind::kPseudoHuber}) {
    const BcomInstance inst = make_synthetic_bcom_instance(small_config(seed, kind));
    for (std::size_t t = 0; t < inst.losses.size(); t += 4) {
      const KappaReport r = verify_kappa_convexity(inst.losses[t], inst.set, 20, 1e-8, rng);
      ++total;
      if (!r.ok) ++failures;
      worst = std::min(worst, r.worst_violation);
    }
  }
  std::ostringstream os;
  os << failures << "/" << total << " losses failed, worst violation = " << worst;
  return {failures == 0, os.str()};
}

CheckOutcome oblivious_adversary(std::uint64_t seed) {
  const SyntheticBcomConfig cfg = small_config(seed, BaseKind::kPseudoHuber);
  const BcomInstance a = make_synthetic_bcom_instance(cfg);
  // Drive two different learners over the first copy, then regenerate.
  run_bcoam(a.losses, a.set, RunParams{0.05, cfg.m, a.cert.alpha, 1.0, seed});
  run_bcoam(a.losses, a.set, RunParams{0.5, cfg.m, a.cert.alpha, 1.0, seed + 1});
  const BcomInstance b = make_synthetic_bcom_instance(cfg);
  int mismatches = 0;
  for (std::size_t t = 0; t < a.losses.size(); ++t) {
    if (a.losses[t].offset() != b.losses[t].offset()) ++mismatches;
    for (std::size_t i = 0; i < a.losses[t].signals().size(); ++i) {
      if (a.losses[t].signals()[i] != b.losses[t].signals()[i]) ++mismatches;
    }
  }
  // Query order must not matter either.
  AdversarySchedule adv;
  adv.seed = seed;
  const Vector late = adv.at(77, 4, 5);
  for (std::int64_t t = 1; t < 77; ++t) adv.at(t, 4, 5);
  if (adv.at(77, 4, 5) != late) ++mismatches;
  std::ostringstream os;
  os << "parameter mismatches after regeneration = " << mismatches;
  return {mismatches == 0, os.str()};
}

}  // namespace

std::vector<CheckSuite> losses_checks() {
  return {
      {"losses", "gradient_finite_difference", gradient_fd},
      {"losses", "unary_consistency", unary_consistency},
      {"losses", "gradient_bound", gradient_bound},
      {"losses", "kappa_sandwich", kappa_sandwich},
      {"losses", "oblivious_adversary", oblivious_adversary},
  };
}

}  // namespace bcom
