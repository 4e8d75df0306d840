#pragma once

#include <string>
#include <vector>

#include "icubench/data_model.hpp"
#include "icubench/neural/params.hpp"
#include "icubench/rng.hpp"

namespace icubench::nn {

enum class Activation { sigmoid, relu };

/// Output arity and activation for a task: one sigmoid for mortality and
/// decompensation, one ReLU for remaining LoS, 25 sigmoids for phenotyping.
struct HeadShape {
  int outputs = 1;
  Activation activation = Activation::sigmoid;
};

HeadShape head_shape(Task task);

/// Affine map followed by the task activation: y = act(W r + b).
class Head {
 public:
  Head(ParamSet& params, const std::string& prefix, int input_width, HeadShape shape, Rng& rng);

  /// r is [in x B]; returns [outputs x B].
  Mat forward(const Mat& r);
  /// Accumulates parameter gradients, returns d r.
  Mat backward(const Mat& d_out);

  HeadShape shape() const { return shape_; }
  int input_width() const { return input_width_; }
  /// Pre-activations of the last forward call.
  const Mat& pre_activation() const { return z_; }
  ParamBlock& weight() { return *w_; }
  ParamBlock& bias() { return *b_; }

 private:
  int input_width_;
  HeadShape shape_;
  ParamBlock* w_;
  ParamBlock* b_;
  Mat r_;
  Mat z_;
  Mat y_;
};

struct LossValue {
  double value = 0.0;
  /// d loss / d prediction, same shape as the predictions.
  Mat grad;
};

inline constexpr double kProbabilityClamp = 1e-12;

/// Mean binary cross-entropy over all entries (all 25 labels for
/// phenotyping) or mean squared error for remaining LoS. Classification
/// labels outside {0,1} throw std::invalid_argument.
LossValue loss(const Mat& predictions, const Mat& labels, Task task);

}  // namespace icubench::nn
