#include <benchmark/benchmark.h>

#include "icubench/evaluation.hpp"
#include "icubench/rng.hpp"

using namespace icubench;

namespace {

void scores(std::int64_t n, std::vector<double>& s, std::vector<int>& y) {
  Rng rng(3);
  s.resize(n);
  y.resize(n);
  for (std::int64_t i = 0; i < n; ++i) {
    y[i] = rng.bernoulli(0.1);
    s[i] = rng.uniform() + 0.5 * y[i];
  }
}

void BM_Auroc(benchmark::State& state) {
  std::vector<double> s;
  std::vector<int> y;
  scores(state.range(0), s, y);
  for (auto _ : state) benchmark::DoNotOptimize(auroc(s, y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(100000);

void BM_ClassificationMetrics(benchmark::State& state) {
  std::vector<double> s;
  std::vector<int> y;
  scores(state.range(0), s, y);
  for (auto _ : state) benchmark::DoNotOptimize(classification_metrics(s, y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ClassificationMetrics)->Arg(100000);

}  // namespace
