// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <vector>

#include "din/kernels.hpp"
#include "din/kmeans.hpp"
#include "din/model.hpp"
#include "din/random.hpp"
#include "din/synth.hpp"

using namespace din;
using kernels::Backend;

namespace {

struct Data {
  std::vector<double> x, c;
  std::vector<std::size_t> labels;
  std::size_t m, p, k;
};

Data make(std::size_t m, std::size_t p, std::size_t k) {
  Rng rng(42);
  Data d{std::vector<double>(m * p), std::vector<double>(k * p), std::vector<std::size_t>(m), m, p, k};
  for (double& v : d.x) v = rng.normal();
  for (double& v : d.c) v = rng.normal();
  for (std::size_t i = 0; i < m; ++i) d.labels[i] = i % k;
  return d;
}

Backend backend(const benchmark::State& s) { return s.range(1) == 0 ? Backend::kSerial : Backend::kParallel; }

void BM_NearestCentroid(benchmark::State& state) {
  const Data d = make(static_cast<std::size_t>(state.range(0)), 32, 7);
  std::vector<std::size_t> labels(d.m);
  std::vector<double> dist(d.m);
  for (auto _ : state) {
    kernels::nearest_centroid({d.x, d.m, d.p}, {d.c, d.k, d.p}, labels, dist, backend(state));
    benchmark::DoNotOptimize(dist.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(d.m));
}

void BM_Silhouette(benchmark::State& state) {
  const Data d = make(static_cast<std::size_t>(state.range(0)), 32, 7);
  std::vector<double> out(d.m);
  for (auto _ : state) {
    kernels::silhouette_values({d.x, d.m, d.p}, d.labels, d.k, out, backend(state));
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_PairwiseSummary(benchmark::State& state) {
  const Data d = make(static_cast<std::size_t>(state.range(0)), 32, 7);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::pairwise_summary({d.x, d.m, d.p}, d.labels, d.k, backend(state)));
}

void BM_KMeans(benchmark::State& state) {
  const Data d = make(static_cast<std::size_t>(state.range(0)), 32, 7);
  cluster::FeatureMatrix x(d.m, d.p);
  x.data = d.x;
  cluster::KMeansConfig cfg;
  cfg.backend = backend(state);
  for (auto _ : state) benchmark::DoNotOptimize(cluster::kmeans(x, cfg).model.inertia);
}

void BM_Embed(benchmark::State& state) {
  cohort::SynthConfig cfg;
  cfg.regimes = cohort::default_regimes(3);
  cfg.per_regime = static_cast<std::size_t>(state.range(0)) / 3;
  const cohort::Cohort c = cohort::standardize(cohort::temporal_split(cohort::synthesize(cfg).cohort, {}));
  std::vector<const cohort::Encounter*> enc;
  for (const auto& e : c.encounters) enc.push_back(&e);
  const model::ModelParams params = model::ModelParams::init({}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(model::embed(params, enc));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(enc.size()));
}

}  // namespace

// Second argument: 0 serial, 1 OpenMP.
BENCHMARK(BM_NearestCentroid)->ArgsProduct({{1000, 20000}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Silhouette)->ArgsProduct({{500, 2000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairwiseSummary)->ArgsProduct({{500, 2000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KMeans)->ArgsProduct({{2000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Embed)->Arg(300)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
