#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "icubench/neural/batch.hpp"
#include "icubench/neural/models.hpp"

namespace icubench::nn {

struct GradCheckConfig {
  double epsilon = 1e-5;
  /// Total coordinates to compare (fewer only when the model is smaller).
  /// Every block / row group gets an equal share; what a small group cannot
  /// fill passes to the others.
  int coordinates = 240;
  /// Lower bound on the relative-error denominator so that near-zero
  /// gradients are compared absolutely.
  double denominator_floor = 1e-6;
  std::uint64_t seed = 7;
};

struct CoordinateCheck {
  std::string group;
  int row = 0;
  int col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  CoordinateCheck worst;
  std::vector<CoordinateCheck> checked;
  /// Coordinates whose central difference crossed a ReLU kink.
  std::vector<CoordinateCheck> kinks;
  std::set<std::string> groups;
};

/// Compares analytic parameter gradients of the task loss against central
/// finite differences. Frozen blocks are skipped. Parameters are restored
/// afterwards.
GradCheckResult grad_check(Model& model, const SequenceBatch& batch, const Mat& labels,
                           const GradCheckConfig& cfg = {});

}  // namespace icubench::nn
