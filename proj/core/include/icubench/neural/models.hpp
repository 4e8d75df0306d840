#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "icubench/data_model.hpp"
#include "icubench/neural/batch.hpp"
#include "icubench/neural/heads.hpp"
#include "icubench/neural/input_layer.hpp"
#include "icubench/neural/lstm.hpp"
#include "icubench/neural/params.hpp"

namespace icubench::nn {

enum class ModelKind {
  /// Logistic (or ReLU-clamped linear) regression on the mean-pooled input.
  linear,
  /// One ReLU hidden layer on the mean-pooled input.
  ann,
  bilstm,
};

std::string_view model_kind_name(ModelKind k);
std::optional<ModelKind> model_kind_from(std::string_view name);

/// Which BiLSTM state feeds the head.
enum class Readout {
  /// h_T = [fwd at the last valid step ; bwd at step 0].
  summary,
  /// h_t at each sequence's last valid step.
  last_step,
};

struct ModelConfig {
  ModelKind kind = ModelKind::bilstm;
  Task task = Task::mortality;
  InputSpec input;
  int lstm_hidden = 64;
  int ann_hidden = 64;
  /// Unset picks the task default: summary for mortality and phenotyping,
  /// last_step for LoS and decompensation.
  std::optional<Readout> readout;
  std::uint64_t seed = 1;

  Readout effective_readout() const;
};

/// A full model: input layer, encoder or pooling, and task head.
///
/// Embedding tables and all other parameters are initialised from separate
/// random substreams, so the encoder and head start from the same values
/// whatever the categorical encoding.
class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  int input_width() const { return input_.width(); }

  /// [outputs x B] predictions.
  Mat forward(const SequenceBatch& batch);
  /// Backpropagates d loss / d predictions through the last forward call.
  void backward(const Mat& d_pred);

  /// Pre-activations of every ReLU unit in the last forward call, used to
  /// spot finite-difference steps that cross a kink.
  Vec relu_preactivations() const;

 private:
  Mat pooled_input(const SequenceBatch& batch);
  Mat lstm_readout(const EncoderState& state, const SequenceBatch& batch) const;

  ModelConfig cfg_;
  ParamSet params_;
  InputLayer input_;
  std::unique_ptr<BiLstm> lstm_;
  ParamBlock* hidden_w_ = nullptr;
  ParamBlock* hidden_b_ = nullptr;
  std::unique_ptr<Head> head_;

  // caches from the last forward call
  const SequenceBatch* batch_ = nullptr;
  std::vector<Mat> xs_;
  Mat pooled_;
  Mat hidden_z_;
  Mat hidden_a_;
};

/// Inputs for the selected variable subset.
InputSpec input_spec(bool use_numeric, bool use_categorical, Encoding encoding, std::vector<int> vocab_sizes);

}  // namespace icubench::nn
