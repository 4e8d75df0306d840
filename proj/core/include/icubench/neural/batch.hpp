#pragma once

#include <vector>

#include <Eigen/Core>

#include "icubench/neural/params.hpp"

namespace icubench::nn {

using IndexMat = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

/// B sequences padded to a common length, stored step-major.
///
/// numeric[t] is [n_numeric x B], categorical[t] is [n_categorical x B]
/// holding vocab indices. Sequences are left-aligned; `mask` is [L x B]
/// with 1 for valid steps and is left empty when no column is padded.
struct SequenceBatch {
  int length = 0;
  int size = 0;
  std::vector<Mat> numeric;
  std::vector<IndexMat> categorical;
  Mat mask;
  std::vector<int> lengths;

  bool padded() const { return mask.size() != 0; }
  /// Sets up storage for B sequences of the given lengths.
  void reset(std::vector<int> lengths, int n_numeric, int n_categorical);
};

}  // namespace icubench::nn
