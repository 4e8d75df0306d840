#include "icubench/neural/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "icubench/errors.hpp"
#include "icubench/neural/heads.hpp"

namespace icubench::nn {

std::vector<std::vector<std::size_t>> length_buckets(const SequenceSource& source,
                                                     std::span<const std::size_t> indices, int batch_size) {
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> order(indices.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return source.length(indices[a]) < source.length(indices[b]);
  });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(order.size(), i + static_cast<std::size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

TrainHistory fit(Model& model, const SequenceSource& source, std::span<const std::size_t> indices,
                 const TrainConfig& cfg, const std::function<void(int, double)>& on_epoch) {
  if (cfg.epochs < 0) throw ConfigError("epochs must be non-negative");
  TrainHistory history;
  if (indices.empty()) return history;
  Adam adam(model.params(), cfg.adam);
  const Task task = model.config().task;
  std::vector<std::size_t> shuffled(indices.begin(), indices.end());
  std::vector<std::size_t> ids;
  SequenceBatch batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto rng = Rng::substream(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch));
    rng.shuffle(shuffled);
    auto batches = length_buckets(source, shuffled, cfg.batch_size);
    rng.shuffle(batches);
    double total = 0.0;
    for (const auto& positions : batches) {
      ids.clear();
      for (auto p : positions) ids.push_back(shuffled[p]);
      source.fill(ids, batch);
      model.params().zero_grad();
      const Mat pred = model.forward(batch);
      const auto l = loss(pred, source.labels(ids), task);
      model.backward(l.grad);
      adam.step(history.steps);
      ++history.steps;
      total += l.value;
    }
    history.epoch_loss.push_back(total / static_cast<double>(batches.size()));
    if (on_epoch) on_epoch(epoch, history.epoch_loss.back());
  }
  return history;
}

Mat predict(Model& model, const SequenceSource& source, std::span<const std::size_t> indices, int batch_size) {
  const int outputs = head_shape(model.config().task).outputs;
  Mat out(outputs, static_cast<Eigen::Index>(indices.size()));
  SequenceBatch batch;
  std::vector<std::size_t> ids;
  for (const auto& positions : length_buckets(source, indices, batch_size)) {
    ids.clear();
    for (auto p : positions) ids.push_back(indices[p]);
    source.fill(ids, batch);
    const Mat pred = model.forward(batch);
    for (std::size_t j = 0; j < positions.size(); ++j) {
      out.col(static_cast<Eigen::Index>(positions[j])) = pred.col(static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

}  // namespace icubench::nn
