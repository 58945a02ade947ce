#include <benchmark/benchmark.h>

#include <map>
#include <numeric>

#include "supclust/supclust.hpp"

namespace {

using namespace supclust;

const EmbeddingSet& blobs(std::size_t per_class, std::size_t dim) {
  static std::map<std::pair<std::size_t, std::size_t>, EmbeddingSet> cache;
  const auto key = std::make_pair(per_class, dim);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, make_blobs({10, per_class, 1.0}, {dim, 1.0, 0.35, 1})).first;
  }
  return it->second;
}

void BM_KMeans(benchmark::State& state) {
  const auto& data = blobs(static_cast<std::size_t>(state.range(0)), 32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kmeans(data, 50, 3));
  }
  state.SetItemsProcessed(state.iterations() * data.size());
}
BENCHMARK(BM_KMeans)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Typicality(benchmark::State& state) {
  const auto& data = blobs(static_cast<std::size_t>(state.range(0)), 32);
  std::vector<Index> all(data.size());
  std::iota(all.begin(), all.end(), Index{0});
  for (auto _ : state) {
    benchmark::DoNotOptimize(typicality(data, all, all, 20));
  }
}
BENCHMARK(BM_Typicality)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_SupClustQuery(benchmark::State& state) {
  const auto& data = blobs(200, 32);
  StrategyConfig config;
  std::vector<Index> labeled(static_cast<std::size_t>(state.range(0)));
  std::iota(labeled.begin(), labeled.end(), Index{0});
  const LabeledPool pool(labeled);
  for (auto _ : state) {
    benchmark::DoNotOptimize(supclust_query(data, pool, 10, config));
  }
}
BENCHMARK(BM_SupClustQuery)->Arg(0)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
