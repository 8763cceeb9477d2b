#include <benchmark/benchmark.h>

#include "cigen/gan.hpp"
#include "cigen/rng.hpp"
#include "cigen/stats.hpp"
#include "cigen/synth.hpp"

namespace {

cigen::Matrix gaussian(cigen::Index rows, cigen::Index cols, std::uint64_t seed) {
  auto rng = cigen::make_rng(seed);
  cigen::Matrix m(rows, cols);
  for (cigen::Index i = 0; i < m.size(); ++i) m.data()[i] = cigen::standard_normal(rng);
  return m;
}

void BM_DistanceCorrelation(benchmark::State& state) {
  const auto n = state.range(0);
  const auto x = gaussian(n, 1, 1);
  const auto y = gaussian(n, 1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(cigen::distance_correlation(x, y));
  state.SetComplexityN(n);
}
BENCHMARK(BM_DistanceCorrelation)->RangeMultiplier(2)->Range(128, 1024)->Complexity();

void BM_BoundDistanceCorrelation(benchmark::State& state) {
  const auto x = gaussian(500, 1, 1);
  const auto y = gaussian(500, 1, 2);
  const auto bound = cigen::bind_statistic(cigen::StatKind::distance_correlation, y, {}, 0);
  for (auto _ : state) benchmark::DoNotOptimize(bound->evaluate(x));
}
BENCHMARK(BM_BoundDistanceCorrelation);

void BM_KsIndependence(benchmark::State& state) {
  const auto x = gaussian(state.range(0), 1, 1);
  const auto y = gaussian(state.range(0), 1, 2);
  const cigen::Vector xv = x.col(0), yv = y.col(0);
  for (auto _ : state) benchmark::DoNotOptimize(cigen::ks_independence(xv, yv));
}
BENCHMARK(BM_KsIndependence)->Arg(500);

void BM_MlpForwardBackward(benchmark::State& state) {
  const auto width = state.range(0);
  const auto net = cigen::Mlp::xavier({width + 5, 2 * width, 2 * width, 1}, cigen::Activation::relu,
                                      cigen::Activation::identity, 3);
  const auto input = gaussian(64, width + 5, 4);
  const cigen::Matrix upstream = cigen::Matrix::Ones(64, 1);
  cigen::ForwardCache cache;
  cigen::Parameters grads;
  for (auto _ : state) {
    net.forward(input, cache);
    net.backward(cache, upstream, &grads);
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_MlpForwardBackward)->Arg(5)->Arg(50)->Arg(100);

// Training cost per iteration at a given d_z.
void BM_GanIterations(benchmark::State& state) {
  const auto dz = static_cast<std::size_t>(state.range(0));
  cigen::SynthSpec spec;
  spec.n = 500;
  spec.dz = dz;
  spec.seed = 5;
  const auto data = cigen::generate(spec);
  cigen::GanConfig config;
  config.iterations = 50;
  for (auto _ : state) benchmark::DoNotOptimize(cigen::train_null_sampler(data.x, data.z, config));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * config.iterations));
}
BENCHMARK(BM_GanIterations)->Arg(5)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
