#include <benchmark/benchmark.h>

#include <protoridge/accumulator.hpp>
#include <protoridge/projector.hpp>
#include <protoridge/ridge_head.hpp>
#include <protoridge/rng.hpp>

using namespace protoridge;

namespace {

EmbeddingBatch random_batch(std::uint32_t n, std::uint32_t h, std::uint32_t classes) {
  Rng rng(7);
  RowMatrix v(n, h);
  for (long i = 0; i < v.rows(); ++i) {
    for (long j = 0; j < v.cols(); ++j) v(i, j) = rng.normal();
  }
  Labels y(n);
  for (std::uint32_t i = 0; i < n; ++i) y[i] = i % classes;
  return EmbeddingBatch(h, std::move(v), std::move(y));
}

// N x H embeddings through an H x Q ReLU projection.
void BM_Project(benchmark::State& state) {
  const auto q = static_cast<std::uint32_t>(state.range(0));
  const auto batch = random_batch(256, 768, 50);
  const auto p = make_projection(768, q, 1);
  for (auto _ : state) benchmark::DoNotOptimize(project(p, batch));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_Project)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

// Gram and prototype accumulation for a 256-row feature batch.
void BM_StatsUpdate(benchmark::State& state) {
  const auto q = static_cast<std::uint32_t>(state.range(0));
  const auto feats = project(make_projection(64, q, 1), random_batch(256, 64, 50));
  auto stats = stats_new(q, 50);
  for (auto _ : state) {
    stats.update(feats.features, feats.labels);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_StatsUpdate)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

// Cholesky solve of (G + lambda I) W = K.
void BM_SolveHead(benchmark::State& state) {
  const auto q = static_cast<std::uint32_t>(state.range(0));
  const auto feats = project(make_projection(64, q, 1), random_batch(1024, 64, 50));
  const auto stats = stats_update(stats_new(q, 50), feats.features, feats.labels);
  for (auto _ : state) benchmark::DoNotOptimize(solve_head(stats, 1.0));
}
BENCHMARK(BM_SolveHead)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
