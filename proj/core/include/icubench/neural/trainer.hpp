#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "icubench/neural/batch.hpp"
#include "icubench/neural/models.hpp"
#include "icubench/neural/params.hpp"

namespace icubench::nn {

/// Instances the trainer can batch. Indices refer to the source's own
/// numbering.
class SequenceSource {
 public:
  virtual ~SequenceSource() = default;

  virtual std::size_t size() const = 0;
  /// Window length of instance i in steps.
  virtual int length(std::size_t i) const = 0;
  /// Fills `batch` with the given instances, in order.
  virtual void fill(std::span<const std::size_t> indices, SequenceBatch& batch) const = 0;
  /// [outputs x indices.size()] label matrix.
  virtual Mat labels(std::span<const std::size_t> indices) const = 0;
};

struct TrainConfig {
  int epochs = 10;
  int batch_size = 128;
  AdamConfig adam;
  std::uint64_t seed = 1;
};

struct TrainHistory {
  /// Mean batch loss per epoch.
  std::vector<double> epoch_loss;
  std::int64_t steps = 0;
};

/// Mini-batch Adam training. Each epoch shuffles the instances, groups
/// them into batches of similar window length and visits the batches in
/// random order. `on_epoch` (optional) sees the epoch index and loss.
TrainHistory fit(Model& model, const SequenceSource& source, std::span<const std::size_t> indices,
                 const TrainConfig& cfg, const std::function<void(int, double)>& on_epoch = {});

/// Predictions for `indices`, column j belonging to indices[j].
Mat predict(Model& model, const SequenceSource& source, std::span<const std::size_t> indices, int batch_size = 256);

/// Batches of positions into `indices`, grouped by window length (stable
/// within a length), each at most batch_size long.
std::vector<std::vector<std::size_t>> length_buckets(const SequenceSource& source,
                                                     std::span<const std::size_t> indices, int batch_size);

}  // namespace icubench::nn
