#pragma once

#include <span>
#include <vector>

#include "icubench/neural/batch.hpp"
#include "icubench/neural/params.hpp"
#include "icubench/rng.hpp"

namespace icubench::nn {

enum class Encoding { ohe, embedding };

enum class EmbeddingInit {
  random,
  /// Square identity tables (width = vocab size); embed() then equals
  /// one-hot encoding.
  identity,
};

struct InputSpec {
  bool use_numeric = true;
  bool use_categorical = true;
  Encoding encoding = Encoding::embedding;
  std::vector<int> vocab_sizes;
  /// Per-variable embedding widths; empty selects the default heuristic.
  std::vector<int> embed_dims;
  EmbeddingInit init = EmbeddingInit::random;
  bool freeze_embeddings = false;
  int n_numeric = 13;
};

/// min(50, ceil(vocab / 2)), at least 1.
int default_embedding_width(int vocab_size);

/// Concatenation of the selected rows, one per table.
Vec embed(std::span<const int> indices, std::span<const Mat* const> tables);

/// Builds x_t = [Num_t ; U(Cat_t)] (or [Num_t ; OHE(Cat_t)]) for a batch.
class InputLayer {
 public:
  InputLayer(ParamSet& params, InputSpec spec, Rng& rng);

  int width() const { return width_; }
  const InputSpec& spec() const { return spec_; }

  /// [width x B] input for step t of the batch.
  Mat forward(const SequenceBatch& batch, int t) const;
  /// Accumulates embedding gradients for step t from d_x [width x B].
  void backward(const SequenceBatch& batch, int t, const Mat& d_x);

 private:
  InputSpec spec_;
  std::vector<ParamBlock*> tables_;
  std::vector<int> offsets_;
  int cat_offset_ = 0;
  int width_ = 0;
};

}  // namespace icubench::nn
