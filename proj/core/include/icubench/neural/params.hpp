#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "icubench/rng.hpp"

namespace icubench::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// A named parameter matrix and its gradient accumulator.
struct ParamBlock {
  std::string name;
  Mat value;
  Mat grad;
  bool trainable = true;
  /// Optional labelled row ranges, e.g. the four gates of a stacked LSTM
  /// weight: (first_row, label) sorted by first_row.
  std::vector<std::pair<int, std::string>> row_groups;

  /// "name" or "name/label" for the row's group.
  std::string group_of(int row) const;
};

/// Owns all parameters of a model. References to blocks stay valid for the
/// lifetime of the set.
class ParamSet {
 public:
  ParamBlock& add(std::string name, int rows, int cols);

  void zero_grad();
  std::size_t size() const;
  std::size_t trainable_size() const;

  std::deque<ParamBlock>& blocks() { return blocks_; }
  const std::deque<ParamBlock>& blocks() const { return blocks_; }
  ParamBlock* find(const std::string& name);

 private:
  std::deque<ParamBlock> blocks_;
};

/// Fills with U(-scale, scale).
void init_uniform(Mat& m, double scale, Rng& rng);

struct AdamConfig {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(ParamSet& params, AdamConfig cfg = {});

  /// Applies one update from the accumulated gradients. Throws
  /// TrainingError naming `batch_id` if any gradient is non-finite; no
  /// parameter is touched in that case.
  void step(std::int64_t batch_id = -1);

  std::int64_t steps() const { return t_; }

 private:
  ParamSet& params_;
  AdamConfig cfg_;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
  std::int64_t t_ = 0;
};

}  // namespace icubench::nn
