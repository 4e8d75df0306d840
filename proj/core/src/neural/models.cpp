#include "icubench/neural/models.hpp"

#include <cmath>

#include "icubench/errors.hpp"

namespace icubench::nn {

namespace {

constexpr std::uint64_t kEmbeddingStream = 1;
constexpr std::uint64_t kModelStream = 2;

InputLayer make_input(ParamSet& params, const ModelConfig& cfg) {
  auto rng = Rng::substream(cfg.seed, kEmbeddingStream);
  return InputLayer(params, cfg.input, rng);
}

}  // namespace

std::string_view model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::linear:
      return "lr";
    case ModelKind::ann:
      return "ann";
    case ModelKind::bilstm:
      return "bilstm";
  }
  return "?";
}

std::optional<ModelKind> model_kind_from(std::string_view name) {
  if (name == "lr" || name == "linear" || name == "logreg" || name == "linreg") return ModelKind::linear;
  if (name == "ann" || name == "ann1") return ModelKind::ann;
  if (name == "bilstm") return ModelKind::bilstm;
  return std::nullopt;
}

Readout ModelConfig::effective_readout() const {
  if (readout) return *readout;
  return task == Task::los || task == Task::decompensation ? Readout::last_step : Readout::summary;
}

InputSpec input_spec(bool use_numeric, bool use_categorical, Encoding encoding, std::vector<int> vocab_sizes) {
  InputSpec spec;
  spec.use_numeric = use_numeric;
  spec.use_categorical = use_categorical;
  spec.encoding = encoding;
  if (use_categorical) spec.vocab_sizes = std::move(vocab_sizes);
  return spec;
}

Model::Model(const ModelConfig& cfg) : cfg_(cfg), input_(make_input(params_, cfg)) {
  if (input_.width() == 0) throw ConfigError("model: no input variables selected");
  auto rng = Rng::substream(cfg.seed, kModelStream);
  int head_in = input_.width();
  switch (cfg.kind) {
    case ModelKind::linear:
      break;
    case ModelKind::ann: {
      if (cfg.ann_hidden < 1) throw ConfigError("model: ann hidden width must be positive");
      hidden_w_ = &params_.add("ann/w", cfg.ann_hidden, input_.width());
      hidden_b_ = &params_.add("ann/b", cfg.ann_hidden, 1);
      init_uniform(hidden_w_->value, 1.0 / std::sqrt(static_cast<double>(input_.width())), rng);
      head_in = cfg.ann_hidden;
      break;
    }
    case ModelKind::bilstm:
      if (cfg.lstm_hidden < 1) throw ConfigError("model: lstm hidden width must be positive");
      lstm_ = std::make_unique<BiLstm>(params_, "lstm", input_.width(), cfg.lstm_hidden, rng);
      head_in = 2 * cfg.lstm_hidden;
      break;
  }
  head_ = std::make_unique<Head>(params_, "head", head_in, head_shape(cfg.task), rng);
}

Mat Model::pooled_input(const SequenceBatch& batch) {
  Mat pooled = Mat::Zero(input_.width(), batch.size);
  xs_.resize(batch.length);
  for (int t = 0; t < batch.length; ++t) {
    xs_[t] = input_.forward(batch, t);
    for (int b = 0; b < batch.size; ++b) {
      if (t < batch.lengths[b]) pooled.col(b) += xs_[t].col(b);
    }
  }
  for (int b = 0; b < batch.size; ++b) pooled.col(b) /= static_cast<double>(batch.lengths[b]);
  return pooled;
}

Mat Model::lstm_readout(const EncoderState& state, const SequenceBatch& batch) const {
  if (cfg_.effective_readout() == Readout::summary) return state.summary();
  const int H = state.hidden();
  Mat r(2 * H, batch.size);
  for (int b = 0; b < batch.size; ++b) {
    const int last = batch.lengths[b] - 1;
    r.col(b).head(H) = state.forward[last].col(b);
    r.col(b).tail(H) = state.backward[last].col(b);
  }
  return r;
}

Mat Model::forward(const SequenceBatch& batch) {
  if (batch.size == 0 || batch.length == 0) throw ShapeError("model: empty batch");
  for (int l : batch.lengths) {
    if (l < 1) throw ShapeError("model: zero-length sequence");
  }
  batch_ = &batch;
  if (cfg_.kind == ModelKind::bilstm) {
    xs_.resize(batch.length);
    for (int t = 0; t < batch.length; ++t) xs_[t] = input_.forward(batch, t);
    const auto state = lstm_->forward(xs_, batch.mask);
    return head_->forward(lstm_readout(state, batch));
  }
  pooled_ = pooled_input(batch);
  if (cfg_.kind == ModelKind::linear) return head_->forward(pooled_);
  hidden_z_ = hidden_w_->value * pooled_;
  hidden_z_.colwise() += hidden_b_->value.col(0);
  hidden_a_ = hidden_z_.cwiseMax(0.0);
  return head_->forward(hidden_a_);
}

void Model::backward(const Mat& d_pred) {
  if (batch_ == nullptr) throw std::logic_error("model: backward before forward");
  const auto& batch = *batch_;
  Mat d_r = head_->backward(d_pred);
  if (cfg_.kind == ModelKind::bilstm) {
    const int H = lstm_->hidden();
    const int L = batch.length;
    std::vector<Mat> d_fwd(L), d_bwd(L);
    if (cfg_.effective_readout() == Readout::summary) {
      d_fwd[L - 1] = d_r.topRows(H);
      d_bwd[0] = d_r.bottomRows(H);
    } else {
      for (int b = 0; b < batch.size; ++b) {
        const int last = batch.lengths[b] - 1;
        if (d_fwd[last].size() == 0) d_fwd[last] = Mat::Zero(H, batch.size);
        if (d_bwd[last].size() == 0) d_bwd[last] = Mat::Zero(H, batch.size);
        d_fwd[last].col(b) = d_r.col(b).head(H);
        d_bwd[last].col(b) = d_r.col(b).tail(H);
      }
    }
    const auto d_xs = lstm_->backward(d_fwd, d_bwd);
    for (int t = 0; t < L; ++t) input_.backward(batch, t, d_xs[t]);
    return;
  }
  Mat d_pooled;
  if (cfg_.kind == ModelKind::ann) {
    const Mat dz = (d_r.array() * (hidden_z_.array() > 0.0).cast<double>()).matrix();
    hidden_w_->grad.noalias() += dz * pooled_.transpose();
    hidden_b_->grad.col(0) += dz.rowwise().sum();
    d_pooled = hidden_w_->value.transpose() * dz;
  } else {
    d_pooled = std::move(d_r);
  }
  for (int b = 0; b < batch.size; ++b) d_pooled.col(b) /= static_cast<double>(batch.lengths[b]);
  Mat d_x(input_.width(), batch.size);
  for (int t = 0; t < batch.length; ++t) {
    for (int b = 0; b < batch.size; ++b) {
      if (t < batch.lengths[b]) {
        d_x.col(b) = d_pooled.col(b);
      } else {
        d_x.col(b).setZero();
      }
    }
    input_.backward(batch, t, d_x);
  }
}

Vec Model::relu_preactivations() const {
  const bool relu_head = head_->shape().activation == Activation::relu;
  const Eigen::Index n_hidden = cfg_.kind == ModelKind::ann ? hidden_z_.size() : 0;
  const Eigen::Index n_head = relu_head ? head_->pre_activation().size() : 0;
  Vec out(n_hidden + n_head);
  if (n_hidden > 0) out.head(n_hidden) = hidden_z_.reshaped();
  if (n_head > 0) out.tail(n_head) = head_->pre_activation().reshaped();
  return out;
}

}  // namespace icubench::nn
