#include "icubench/neural/params.hpp"

#include <cmath>

#include "icubench/errors.hpp"

namespace icubench::nn {

std::string ParamBlock::group_of(int row) const {
  const std::string* label = nullptr;
  for (const auto& [first, l] : row_groups) {
    if (row >= first) label = &l;
  }
  return label ? name + "/" + *label : name;
}

ParamBlock& ParamSet::add(std::string name, int rows, int cols) {
  auto& b = blocks_.emplace_back();
  b.name = std::move(name);
  b.value = Mat::Zero(rows, cols);
  b.grad = Mat::Zero(rows, cols);
  return b;
}

void ParamSet::zero_grad() {
  for (auto& b : blocks_) b.grad.setZero();
}

std::size_t ParamSet::size() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += static_cast<std::size_t>(b.value.size());
  return n;
}

std::size_t ParamSet::trainable_size() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) {
    if (b.trainable) n += static_cast<std::size_t>(b.value.size());
  }
  return n;
}

ParamBlock* ParamSet::find(const std::string& name) {
  for (auto& b : blocks_) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

void init_uniform(Mat& m, double scale, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-scale, scale);
  }
}

Adam::Adam(ParamSet& params, AdamConfig cfg) : params_(params), cfg_(cfg) {
  for (const auto& b : params_.blocks()) {
    m_.push_back(Mat::Zero(b.value.rows(), b.value.cols()));
    v_.push_back(Mat::Zero(b.value.rows(), b.value.cols()));
  }
}

void Adam::step(std::int64_t batch_id) {
  for (const auto& b : params_.blocks()) {
    if (b.trainable && !b.grad.allFinite()) {
      throw TrainingError("non-finite gradient in '" + b.name + "' at batch " + std::to_string(batch_id));
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  std::size_t k = 0;
  for (auto& b : params_.blocks()) {
    auto& m = m_[k];
    auto& v = v_[k];
    ++k;
    if (!b.trainable) continue;
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * b.grad;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * b.grad.cwiseProduct(b.grad);
    b.value.array() -= cfg_.step_size * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.epsilon);
  }
}

}  // namespace icubench::nn
