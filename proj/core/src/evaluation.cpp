#include "icubench/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "icubench/errors.hpp"

namespace icubench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ClassCounts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

ClassCounts check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
  ClassCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("labels must be 0 or 1");
    if (std::isnan(scores[i])) throw std::invalid_argument("score is NaN");
    (labels[i] == 1 ? c.pos : c.neg) += 1;
  }
  return c;
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

double ratio(double num, double den) { return den > 0 ? num / den : kNaN; }

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  const auto counts = check_inputs(scores, labels);
  if (counts.pos == 0 || counts.neg == 0) throw UndefinedMetricError("AUROC needs both classes");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the rank sum of positives, using mid-ranks so ties count half.
  double twice_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t pos_in_tie = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) pos_in_tie += labels[order[j++]];
    // ranks i+1 .. j, mid-rank (i+1+j)/2
    twice_rank_sum += static_cast<double>(pos_in_tie) * static_cast<double>(i + 1 + j);
    i = j;
  }
  const double p = static_cast<double>(counts.pos);
  const double n = static_cast<double>(counts.neg);
  const double twice_u = twice_rank_sum - p * (p + 1.0);
  return twice_u / (2.0 * p * n);
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
  const auto counts = check_inputs(scores, labels);
  if (counts.pos == 0) throw UndefinedMetricError("AUPRC needs at least one positive");
  const auto order = descending_order(scores);
  const double total_pos = static_cast<double>(counts.pos);
  double ap = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  std::size_t prev_tp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) tp += labels[order[j++]];
    seen = j;
    if (tp != prev_tp) {
      ap += (static_cast<double>(tp - prev_tp) / total_pos) * (static_cast<double>(tp) / static_cast<double>(seen));
      prev_tp = tp;
    }
    i = j;
  }
  return ap;
}

OperatingPoint confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_inputs(scores, labels);
  double tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      (predicted ? tp : fn) += 1;
    } else {
      (predicted ? fp : tn) += 1;
    }
  }
  return {threshold, ratio(tp, tp + fn), ratio(tn, tn + fp), ratio(tp, tp + fp), ratio(tn, tn + fn)};
}

OperatingPoint operating_point(std::span<const double> scores, std::span<const int> labels,
                               double target_sensitivity) {
  const auto counts = check_inputs(scores, labels);
  if (counts.pos == 0 || counts.neg == 0) throw UndefinedMetricError("operating point needs both classes");
  const auto order = descending_order(scores);
  const double total_pos = static_cast<double>(counts.pos);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) tp += labels[order[j++]];
    if (static_cast<double>(tp) / total_pos >= target_sensitivity) return confusion_at(scores, labels, scores[order[i]]);
    i = j;
  }
  return confusion_at(scores, labels, scores[order.back()]);
}

ClassificationMetrics classification_metrics(std::span<const double> scores, std::span<const int> labels,
                                             double target_sensitivity) {
  ClassificationMetrics m;
  m.auroc = auroc(scores, labels);
  m.auprc = auprc(scores, labels);
  m.operating = operating_point(scores, labels, target_sensitivity);
  m.sensitivity = target_sensitivity;
  m.specificity = m.operating.specificity;
  m.ppv = m.operating.ppv;
  m.npv = m.operating.npv;
  return m;
}

RegressionMetrics regression_metrics(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) throw std::invalid_argument("predictions and targets differ in length");
  if (targets.empty()) throw std::invalid_argument("regression metrics need at least one value");
  RegressionMetrics m;
  const double mean = mean_of(targets);
  double ss_res = 0.0;
  double ss_tot = 0.0;
  double abs_err = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double r = targets[i] - predictions[i];
    ss_res += r * r;
    ss_tot += (targets[i] - mean) * (targets[i] - mean);
    abs_err += std::abs(r);
  }
  m.mae = abs_err / static_cast<double>(targets.size());
  if (ss_tot > 0.0) m.r2 = 1.0 - ss_res / ss_tot;
  return m;
}

double r2_score(std::span<const double> predictions, std::span<const double> targets) {
  const auto m = regression_metrics(predictions, targets);
  if (!m.r2) throw UndefinedMetricError("R2 undefined for constant targets");
  return *m.r2;
}

double t_quantile(double p, double df) {
  boost::math::students_t dist(df);
  return boost::math::quantile(dist, p);
}

FoldAggregate aggregate_folds(std::span<const double> values, double confidence) {
  if (values.size() < 2) throw std::invalid_argument("fold aggregation needs at least two folds");
  if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("confidence must lie in (0, 1)");
  FoldAggregate a;
  a.k = static_cast<int>(values.size());
  a.mean = mean_of(values);
  a.sd = std::sqrt(sample_variance(values, a.mean));
  a.half_width = t_quantile(0.5 + confidence / 2.0, a.k - 1) * a.sd / std::sqrt(static_cast<double>(a.k));
  return a;
}

std::string TTestResult::flag() const {
  if (significant_05()) return "†";
  if (significant_10()) return "‡";
  return "";
}

TTestResult t_test(std::span<const double> a, std::span<const double> b, TTestMode mode) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("t-test needs at least two values per sample");
  TTestResult r;
  double diff = 0.0;
  double se2 = 0.0;
  if (mode == TTestMode::paired) {
    if (a.size() != b.size()) throw std::invalid_argument("paired t-test needs equal sample sizes");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    diff = mean_of(d);
    se2 = sample_variance(d, diff) / static_cast<double>(d.size());
    r.df = static_cast<double>(d.size() - 1);
  } else {
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    const double va = sample_variance(a, ma) / na;
    const double vb = sample_variance(b, mb) / nb;
    diff = ma - mb;
    se2 = va + vb;
    r.df = se2 > 0.0 ? se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0)) : na + nb - 2.0;
  }
  if (se2 == 0.0) {
    r.t = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    r.p = diff == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = diff / std::sqrt(se2);
  // two-tailed p = I_{df/(df+t^2)}(df/2, 1/2)
  r.p = boost::math::ibeta(r.df / 2.0, 0.5, r.df / (r.df + r.t * r.t));
  return r;
}

std::string_view t_test_mode_name(TTestMode m) { return m == TTestMode::paired ? "paired" : "welch"; }

std::optional<TTestMode> t_test_mode_from(std::string_view name) {
  if (name == "welch") return TTestMode::welch;
  if (name == "paired") return TTestMode::paired;
  return std::nullopt;
}

}  // namespace icubench
