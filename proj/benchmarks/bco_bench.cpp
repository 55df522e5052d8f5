#include <benchmark/benchmark.h>

#include <cmath>

#include "bcom/bco.hpp"
#include "bcom/losses.hpp"

namespace {

using namespace bcom;

// Cost of one learner step, amortised over update and frozen steps.
void BM_BcoamStep(benchmark::State& state) {
  const Index d = state.range(0);
  const int m = 4;
  const ConvexSet set = ConvexSet::ball(Vector::Zero(d), 1.0);
  const BcoParams p{0.01, m, 1.0, 1.0};
  Rng bernoulli = make_stream(1, Stream::kBernoulli);
  Rng sphere = make_stream(1, Stream::kSphere);
  BcomState s = init_bcom_state(set, p, bernoulli, sphere);
  const PsdMatrix h = PsdMatrix::identity(d);
  for (auto _ : state) {
    const double f = 0.5 * s.z.squaredNorm();
    benchmark::DoNotOptimize(bcoam_step(s, set, f, h, p, bernoulli, sphere));
  }
}
BENCHMARK(BM_BcoamStep)->Arg(4)->Arg(16)->Arg(64);

void BM_RunBcoam(benchmark::State& state) {
  SyntheticBcomConfig c;
  c.horizon = static_cast<int>(state.range(0));
  c.seed = 3;
  const BcomInstance inst = make_synthetic_bcom_instance(c);
  const RunParams p{1.0 / std::sqrt(static_cast<double>(c.horizon)), c.m, inst.cert.alpha, 1.0, 5};
  for (auto _ : state) benchmark::DoNotOptimize(run_bcoam(inst.losses, inst.set, p));
  state.SetItemsProcessed(state.iterations() * c.horizon);
}
BENCHMARK(BM_RunBcoam)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_AffineLossEval(benchmark::State& state) {
  SyntheticBcomConfig c;
  c.horizon = 16;
  const BcomInstance inst = make_synthetic_bcom_instance(c);
  const AffineMemoryLoss& f = inst.losses.back();
  const std::vector<Vector> window(static_cast<std::size_t>(c.m), inst.set.center());
  for (auto _ : state) benchmark::DoNotOptimize(f.eval(window));
}
BENCHMARK(BM_AffineLossEval);

}  // namespace
