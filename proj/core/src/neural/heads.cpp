#include "icubench/neural/heads.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "icubench/errors.hpp"

namespace icubench::nn {

HeadShape head_shape(Task task) {
  switch (task) {
    case Task::mortality:
    case Task::decompensation:
      return {1, Activation::sigmoid};
    case Task::los:
      return {1, Activation::relu};
    case Task::phenotyping:
      return {kNumPhenotypes, Activation::sigmoid};
  }
  return {};
}

Head::Head(ParamSet& params, const std::string& prefix, int input_width, HeadShape shape, Rng& rng)
    : input_width_(input_width), shape_(shape) {
  w_ = &params.add(prefix + "/w", shape.outputs, input_width);
  b_ = &params.add(prefix + "/b", shape.outputs, 1);
  init_uniform(w_->value, 1.0 / std::sqrt(static_cast<double>(std::max(1, input_width))), rng);
}

Mat Head::forward(const Mat& r) {
  if (r.rows() != input_width_) throw ShapeError("head: input width mismatch");
  r_ = r;
  z_ = w_->value * r;
  z_.colwise() += b_->value.col(0);
  if (shape_.activation == Activation::sigmoid) {
    y_ = (1.0 / (1.0 + (-z_.array()).exp())).matrix();
  } else {
    y_ = z_.cwiseMax(0.0);
  }
  return y_;
}

Mat Head::backward(const Mat& d_out) {
  if (d_out.rows() != y_.rows() || d_out.cols() != y_.cols()) throw ShapeError("head: gradient shape mismatch");
  Mat dz;
  if (shape_.activation == Activation::sigmoid) {
    dz = (d_out.array() * y_.array() * (1.0 - y_.array())).matrix();
  } else {
    dz = (d_out.array() * (z_.array() > 0.0).cast<double>()).matrix();
  }
  w_->grad.noalias() += dz * r_.transpose();
  b_->grad.col(0) += dz.rowwise().sum();
  return w_->value.transpose() * dz;
}

LossValue loss(const Mat& predictions, const Mat& labels, Task task) {
  if (predictions.rows() != labels.rows() || predictions.cols() != labels.cols()) {
    throw ShapeError("loss: prediction/label shape mismatch");
  }
  LossValue out;
  const double n = static_cast<double>(predictions.size());
  if (n == 0) throw ShapeError("loss: empty batch");
  out.grad.resize(predictions.rows(), predictions.cols());
  if (task == Task::los) {
    const Mat diff = predictions - labels;
    out.value = diff.squaredNorm() / n;
    out.grad = 2.0 * diff / n;
    return out;
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < predictions.cols(); ++j) {
    for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
      const double y = labels(i, j);
      if (y != 0.0 && y != 1.0) throw std::invalid_argument("loss: classification labels must be 0 or 1");
      const double p = std::clamp(predictions(i, j), kProbabilityClamp, 1.0 - kProbabilityClamp);
      total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
      const bool clamped = p != predictions(i, j);
      out.grad(i, j) = clamped ? 0.0 : (p - y) / (p * (1.0 - p)) / n;
    }
  }
  out.value = total / n;
  return out;
}

}  // namespace icubench::nn
