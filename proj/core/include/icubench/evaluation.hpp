#pragma once

#include <optional>
#include <span>
#include <string>

namespace icubench {

inline constexpr double kTargetSensitivity = 0.90;

/// Area under the ROC curve: P(score_pos > score_neg) + P(tie) / 2, from
/// mid-ranks. Throws UndefinedMetricError unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Average precision: sum over distinct thresholds (descending) of
/// (recall_k - recall_{k-1}) * precision_k, no interpolation. Throws
/// UndefinedMetricError without positives.
double auprc(std::span<const double> scores, std::span<const int> labels);

/// Confusion-matrix metrics at a score cutoff; positive when score >= threshold.
/// Undefined ratios (zero denominators) are NaN.
struct OperatingPoint {
  double threshold = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double ppv = 0.0;
  double npv = 0.0;
};

/// The largest cutoff whose sensitivity reaches `target_sensitivity`.
/// Throws UndefinedMetricError unless both classes are present.
OperatingPoint operating_point(std::span<const double> scores, std::span<const int> labels,
                               double target_sensitivity = kTargetSensitivity);

/// Metrics at a fixed threshold.
OperatingPoint confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold);

struct ClassificationMetrics {
  double auroc = 0.0;
  double auprc = 0.0;
  double specificity = 0.0;
  /// Always the target (0.90); the achieved value sits in `operating`.
  double sensitivity = kTargetSensitivity;
  double ppv = 0.0;
  double npv = 0.0;
  OperatingPoint operating;
};

ClassificationMetrics classification_metrics(std::span<const double> scores, std::span<const int> labels,
                                             double target_sensitivity = kTargetSensitivity);

struct RegressionMetrics {
  /// Unset when the targets have zero variance.
  std::optional<double> r2;
  double mae = 0.0;
};

RegressionMetrics regression_metrics(std::span<const double> predictions, std::span<const double> targets);

/// 1 - SS_res / SS_tot. Throws UndefinedMetricError for constant targets.
double r2_score(std::span<const double> predictions, std::span<const double> targets);

struct FoldAggregate {
  double mean = 0.0;
  double sd = 0.0;
  /// t_{k-1, (1+confidence)/2} * sd / sqrt(k)
  double half_width = 0.0;
  int k = 0;
};

/// Throws std::invalid_argument for fewer than two values.
FoldAggregate aggregate_folds(std::span<const double> values, double confidence = 0.95);

/// Two-sided Student t quantile with `df` degrees of freedom, e.g.
/// t_quantile(0.975, 4) = 2.776.
double t_quantile(double p, double df);

enum class TTestMode { welch, paired };

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;

  bool significant_05() const { return p < 0.05; }
  bool significant_10() const { return p < 0.10; }
  /// "†" for p < 0.05, "‡" for p < 0.1, empty otherwise.
  std::string flag() const;
};

/// Two-tailed t-test of mean(a) - mean(b). Welch by default; paired mode
/// needs equal sizes. Two zero-variance samples give p = 1 when their
/// means agree and p = 0 otherwise. Throws std::invalid_argument for
/// samples smaller than two.
TTestResult t_test(std::span<const double> a, std::span<const double> b, TTestMode mode = TTestMode::welch);

std::string_view t_test_mode_name(TTestMode m);
std::optional<TTestMode> t_test_mode_from(std::string_view name);

}  // namespace icubench
