#include "icubench/neural/input_layer.hpp"

#include <algorithm>
#include <string>

#include "icubench/errors.hpp"

namespace icubench::nn {

void SequenceBatch::reset(std::vector<int> lens, int n_numeric, int n_categorical) {
  lengths = std::move(lens);
  size = static_cast<int>(lengths.size());
  length = lengths.empty() ? 0 : *std::max_element(lengths.begin(), lengths.end());
  numeric.assign(length, Mat::Zero(n_numeric, size));
  categorical.assign(length, IndexMat::Zero(n_categorical, size));
  const bool ragged = std::any_of(lengths.begin(), lengths.end(), [&](int l) { return l != length; });
  if (ragged) {
    mask = Mat::Zero(length, size);
    for (int b = 0; b < size; ++b) mask.col(b).head(lengths[b]).setOnes();
  } else {
    mask.resize(0, 0);
  }
}

int default_embedding_width(int vocab_size) { return std::max(1, std::min(50, (vocab_size + 1) / 2)); }

Vec embed(std::span<const int> indices, std::span<const Mat* const> tables) {
  if (indices.size() != tables.size()) throw ShapeError("embed: one index per table required");
  Eigen::Index width = 0;
  for (const auto* t : tables) width += t->cols();
  Vec out(width);
  Eigen::Index off = 0;
  for (std::size_t v = 0; v < tables.size(); ++v) {
    const auto& table = *tables[v];
    const int idx = indices[v];
    if (idx < 0 || idx >= table.rows()) {
      throw std::out_of_range("embed: index " + std::to_string(idx) + " outside vocab of size " +
                              std::to_string(table.rows()));
    }
    out.segment(off, table.cols()) = table.row(idx).transpose();
    off += table.cols();
  }
  return out;
}

InputLayer::InputLayer(ParamSet& params, InputSpec spec, Rng& rng) : spec_(std::move(spec)) {
  width_ = spec_.use_numeric ? spec_.n_numeric : 0;
  cat_offset_ = width_;
  if (!spec_.use_categorical) return;
  if (spec_.vocab_sizes.empty()) throw ShapeError("input layer: categorical inputs need vocab sizes");
  const auto n = spec_.vocab_sizes.size();
  if (spec_.encoding == Encoding::embedding) {
    if (spec_.embed_dims.empty()) {
      for (int v : spec_.vocab_sizes) {
        spec_.embed_dims.push_back(spec_.init == EmbeddingInit::identity ? v : default_embedding_width(v));
      }
    }
    if (spec_.embed_dims.size() != n) throw ShapeError("input layer: one embedding width per variable required");
    for (std::size_t v = 0; v < n; ++v) {
      auto& block = params.add("embedding/" + std::to_string(v), spec_.vocab_sizes[v], spec_.embed_dims[v]);
      if (spec_.init == EmbeddingInit::identity) {
        if (spec_.embed_dims[v] != spec_.vocab_sizes[v]) throw ShapeError("identity embedding must be square");
        block.value.setIdentity();
      } else {
        init_uniform(block.value, 0.05, rng);
      }
      block.trainable = !spec_.freeze_embeddings;
      tables_.push_back(&block);
      offsets_.push_back(width_);
      width_ += spec_.embed_dims[v];
    }
  } else {
    for (std::size_t v = 0; v < n; ++v) {
      offsets_.push_back(width_);
      width_ += spec_.vocab_sizes[v];
    }
  }
}

Mat InputLayer::forward(const SequenceBatch& batch, int t) const {
  Mat x = Mat::Zero(width_, batch.size);
  if (spec_.use_numeric) {
    const auto& num = batch.numeric.at(t);
    if (num.rows() != spec_.n_numeric) throw ShapeError("input layer: numeric width mismatch");
    x.topRows(spec_.n_numeric) = num;
  }
  if (!spec_.use_categorical) return x;
  const auto& cat = batch.categorical.at(t);
  if (cat.rows() != static_cast<Eigen::Index>(spec_.vocab_sizes.size())) {
    throw ShapeError("input layer: categorical width mismatch");
  }
  for (int b = 0; b < batch.size; ++b) {
    for (std::size_t v = 0; v < spec_.vocab_sizes.size(); ++v) {
      const int idx = cat(static_cast<Eigen::Index>(v), b);
      if (idx < 0 || idx >= spec_.vocab_sizes[v]) {
        throw std::out_of_range("input layer: vocab index " + std::to_string(idx) + " out of range");
      }
      if (spec_.encoding == Encoding::embedding) {
        const auto& table = tables_[v]->value;
        x.col(b).segment(offsets_[v], table.cols()) = table.row(idx).transpose();
      } else {
        x(offsets_[v] + idx, b) = 1.0;
      }
    }
  }
  return x;
}

void InputLayer::backward(const SequenceBatch& batch, int t, const Mat& d_x) {
  if (!spec_.use_categorical || spec_.encoding != Encoding::embedding) return;
  const auto& cat = batch.categorical.at(t);
  for (std::size_t v = 0; v < tables_.size(); ++v) {
    auto& block = *tables_[v];
    if (!block.trainable) continue;
    for (int b = 0; b < batch.size; ++b) {
      block.grad.row(cat(static_cast<Eigen::Index>(v), b)) +=
          d_x.col(b).segment(offsets_[v], block.value.cols()).transpose();
    }
  }
}

}  // namespace icubench::nn
