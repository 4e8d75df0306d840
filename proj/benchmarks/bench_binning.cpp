#include <benchmark/benchmark.h>

#include <cstdio>

#include "icubench/preprocessing.hpp"

using namespace icubench;

namespace {

/// One stay's worth of charted records: every numeric variable hourly,
/// GCS every four hours.
std::vector<StayRecordRaw> stay_records(int hours) {
  Rng rng(1);
  std::vector<StayRecordRaw> out;
  for (int h = 0; h < hours; ++h) {
    for (int v = 0; v < kNumNumerical; ++v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", rng.uniform(50, 150));
      out.push_back({1, static_cast<Var>(v), h * 60 + static_cast<int>(rng.below(60)), buf});
    }
    if (h % 4 == 0) out.push_back({1, Var::GcsTotal, h * 60 + 5, "14"});
  }
  return out;
}

void BM_BinHourly(benchmark::State& state) {
  const int hours = static_cast<int>(state.range(0));
  const auto records = stay_records(hours);
  for (auto _ : state) {
    CategoryDictionary dict;
    auto grid = bin_hourly(records, 1, hours, dict);
    benchmark::DoNotOptimize(grid.numeric.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(records.size()));
}
BENCHMARK(BM_BinHourly)->Arg(24)->Arg(120)->Arg(500);

void BM_Impute(benchmark::State& state) {
  const int hours = static_cast<int>(state.range(0));
  auto records = stay_records(hours);
  // thin out the records so imputation has gaps to fill
  std::vector<StayRecordRaw> sparse;
  for (std::size_t i = 0; i < records.size(); i += 3) sparse.push_back(records[i]);
  CategoryDictionary dict;
  const auto grid = bin_hourly(sparse, 1, hours, dict);
  const auto schema = canonical_schema();
  for (auto _ : state) {
    auto g = grid;
    impute(g, schema);
    benchmark::DoNotOptimize(g.numeric.data());
  }
}
BENCHMARK(BM_Impute)->Arg(120);

}  // namespace
