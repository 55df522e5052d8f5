#include <benchmark/benchmark.h>

#include "bcom/geometry.hpp"

namespace {

using namespace bcom;

Matrix random_metric(Index d, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix g(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = n(rng);
  return g.transpose() * g + 0.1 * Matrix::Identity(d, d);
}

Vector far_point(Index d, Rng& rng) {
  std::normal_distribution<double> n(0.0, 3.0);
  Vector p(d);
  for (Index i = 0; i < d; ++i) p(i) = n(rng);
  return p;
}

void BM_BallProjection(benchmark::State& state) {
  const Index d = state.range(0);
  Rng rng(1);
  const ConvexSet set = ConvexSet::ball(Vector::Zero(d), 1.0);
  const SpectralFactor metric{PsdMatrix(random_metric(d, rng))};
  const Vector p = far_point(d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(mahalanobis_project(set, metric, p));
}
BENCHMARK(BM_BallProjection)->Arg(4)->Arg(16)->Arg(64);

void BM_OperatorL1Projection(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  Rng rng(2);
  const ConvexSet set = ConvexSet::operator_l1_ball(m, 2, 2, 1.0);
  const SpectralFactor metric{PsdMatrix(random_metric(set.dimension(), rng))};
  const Vector p = far_point(set.dimension(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(mahalanobis_project(set, metric, p));
}
BENCHMARK(BM_OperatorL1Projection)->Arg(2)->Arg(8)->Arg(14);

void BM_EuclideanOperatorL1(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  Rng rng(3);
  const ConvexSet set = ConvexSet::operator_l1_ball(m, 2, 2, 1.0);
  const Vector p = far_point(set.dimension(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(set.euclidean_project(p));
}
BENCHMARK(BM_EuclideanOperatorL1)->Arg(2)->Arg(8)->Arg(14);

void BM_SpectralFactor(benchmark::State& state) {
  const Index d = state.range(0);
  Rng rng(4);
  const PsdMatrix a(random_metric(d, rng));
  for (auto _ : state) {
    const SpectralFactor f(a);
    benchmark::DoNotOptimize(f.inv_sqrt(0.0));
  }
}
BENCHMARK(BM_SpectralFactor)->Arg(4)->Arg(16)->Arg(64);

}  // namespace
