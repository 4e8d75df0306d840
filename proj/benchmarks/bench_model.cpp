#include <benchmark/benchmark.h>

#include "icubench/neural/heads.hpp"
#include "icubench/neural/models.hpp"
#include "icubench/rng.hpp"

using namespace icubench;
using namespace icubench::nn;

namespace {

const std::vector<int> kVocab = {12, 9, 3, 14, 5, 7, 6};

SequenceBatch make_batch(int length, int size) {
  Rng rng(2);
  SequenceBatch batch;
  batch.reset(std::vector<int>(size, length), kNumNumerical, kNumCategorical);
  for (int t = 0; t < length; ++t) {
    for (int b = 0; b < size; ++b) {
      for (int r = 0; r < kNumNumerical; ++r) batch.numeric[t](r, b) = rng.normal();
      for (int v = 0; v < kNumCategorical; ++v) batch.categorical[t](v, b) = static_cast<int>(rng.below(kVocab[v]));
    }
  }
  return batch;
}

ModelConfig bilstm(int hidden, Encoding encoding) {
  ModelConfig cfg;
  cfg.kind = ModelKind::bilstm;
  cfg.task = Task::mortality;
  cfg.input = input_spec(true, true, encoding, kVocab);
  cfg.lstm_hidden = hidden;
  return cfg;
}

void BM_BiLstmForward(benchmark::State& state) {
  Model model(bilstm(static_cast<int>(state.range(0)), Encoding::embedding));
  const auto batch = make_batch(24, 128);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(batch).data());
  state.SetItemsProcessed(state.iterations() * batch.size);
}
BENCHMARK(BM_BiLstmForward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_BiLstmStep(benchmark::State& state) {
  Model model(bilstm(static_cast<int>(state.range(0)), Encoding::embedding));
  const auto batch = make_batch(24, 128);
  const Mat labels = Mat::Zero(1, batch.size);
  for (auto _ : state) {
    const Mat pred = model.forward(batch);
    model.params().zero_grad();
    model.backward(loss(pred, labels, Task::mortality).grad);
  }
  state.SetItemsProcessed(state.iterations() * batch.size);
}
BENCHMARK(BM_BiLstmStep)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_OheForward(benchmark::State& state) {
  Model model(bilstm(64, Encoding::ohe));
  const auto batch = make_batch(24, 128);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(batch).data());
}
BENCHMARK(BM_OheForward)->Unit(benchmark::kMillisecond);

}  // namespace
