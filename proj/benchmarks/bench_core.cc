#include <benchmark/benchmark.h>

#include <vector>

#include "cranet/eval.h"
#include "cranet/model.h"
#include "cranet/numerics.h"
#include "cranet/random.h"
#include "cranet/training.h"

namespace {

using namespace cranet;

SparseVector sparse(std::size_t n, std::size_t nnz, Rng& rng) {
  std::vector<SparseEntry> e;
  const std::size_t stride = n / nnz;
  for (std::size_t k = 0; k < nnz; ++k) e.push_back({k * stride + uniform_index(rng, stride), 1.0 + uniform_index(rng, 5)});
  return SparseVector(n, std::move(e));
}

void BM_GramRows(benchmark::State& state) {
  const std::size_t d = state.range(0), n = state.range(1);
  Rng rng(1);
  DenseMatrix v(d, n);
  for (double& x : v.flat()) x = standard_normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(gram_rows(v));
}
BENCHMARK(BM_GramRows)->Args({100, 1000})->Args({500, 6040})->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  const auto mode = static_cast<ReflectionMode>(state.range(0));
  const std::size_t n = 6040, d = state.range(1);
  HyperParams h;
  h.hidden_dim = d;
  const ModelParams p = init_params(mode, n, d, 1);
  Rng rng(2);
  const SparseVector r = sparse(n, 270, rng);
  for (auto _ : state) benchmark::DoNotOptimize(forward(p, h, r));
  state.SetLabel(to_string(mode));
}
BENCHMARK(BM_Forward)
    ->Args({static_cast<int>(ReflectionMode::kPlain), 500})
    ->Args({static_cast<int>(ReflectionMode::kTied), 500})
    ->Args({static_cast<int>(ReflectionMode::kImplicit), 500})
    ->Unit(benchmark::kMicrosecond);

void BM_Gradients(benchmark::State& state) {
  const auto mode = static_cast<ReflectionMode>(state.range(0));
  const std::size_t n = 6040, d = 500, batch = state.range(1);
  HyperParams h;
  h.hidden_dim = d;
  const ModelParams p = init_params(mode, n, d, 1);
  Rng rng(3);
  std::vector<SparseVector> b;
  for (std::size_t i = 0; i < batch; ++i) b.push_back(sparse(n, 270, rng));
  for (auto _ : state) benchmark::DoNotOptimize(compute_gradients(p, h, b));
  state.SetItemsProcessed(state.iterations() * batch);
  state.SetLabel(to_string(mode));
}
BENCHMARK(BM_Gradients)
    ->Args({static_cast<int>(ReflectionMode::kPlain), 32})
    ->Args({static_cast<int>(ReflectionMode::kImplicit), 32})
    ->Unit(benchmark::kMillisecond);

void BM_RankItems(benchmark::State& state) {
  const std::size_t m = 3706;
  Rng rng(4);
  std::vector<double> scores(m);
  for (double& s : scores) s = uniform01(rng);
  const SparseVector seen = sparse(m, 160, rng);
  for (auto _ : state) benchmark::DoNotOptimize(rank_items(0, scores, seen, 10));
}
BENCHMARK(BM_RankItems)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
