#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "icubench/dataset.hpp"
#include "icubench/evaluation.hpp"
#include "icubench/neural/models.hpp"

namespace icubench {

enum class TaskSpec { mortality24, mortality48, los, phenotyping, decompensation };

std::string_view task_spec_name(TaskSpec t);
std::optional<TaskSpec> task_spec_from(std::string_view name);
Task task_of(TaskSpec t);
bool is_binary(Task t);

/// Everything that defines one cross-validated run. Each field has a
/// config key of the same name (see `set`).
struct ExperimentConfig {
  TaskSpec task = TaskSpec::mortality24;
  nn::ModelKind model = nn::ModelKind::bilstm;
  nn::Encoding encoding = nn::Encoding::embedding;
  VariableSet variables = VariableSet::all;
  int folds = 5;
  std::uint64_t seed = 1;

  // model and training
  int hidden = 64;
  int ann_hidden = 64;
  /// 0 selects min(50, ceil(vocab / 2)) per variable.
  int embed_dim = 0;
  nn::EmbeddingInit embedding_init = nn::EmbeddingInit::random;
  bool freeze_embeddings = false;
  /// Unset uses the task default.
  std::optional<nn::Readout> readout;
  int epochs = 10;
  int batch_size = 128;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// z-score numeric channels with training-fold statistics (off: raw units).
  bool standardize = false;

  // preprocessing
  Aggregator aggregator = Aggregator::mean_fallback;
  ImputeMode impute = ImputeMode::carry_forward_then_normal;
  int max_hours = 500;
  std::filesystem::path schema_file;
  std::filesystem::path catalog;

  // evaluation
  TTestMode ttest = TTestMode::welch;

  // execution
  /// Folds trained concurrently; 0 uses the hardware thread count.
  int threads = 0;
  std::filesystem::path data_dir;
  std::filesystem::path out_dir;

  /// Sets one field from its config key. Unknown keys and malformed
  /// values raise ConfigError.
  void set(std::string_view key, std::string_view value);
  /// Every key with its current value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const;
  /// Throws ConfigError on inconsistent settings (folds < 2, ...).
  void validate() const;
};

/// `key = value` lines; blank lines and `#` comments are ignored.
void apply_config_text(ExperimentConfig& cfg, std::string_view text);
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

/// Patient -> fold. Folds are sized within one patient of each other and
/// depend only on the distinct patient ids and the seed. Throws ConfigError
/// for k < 2 or fewer patients than folds.
std::map<PatientId, int> make_folds(std::span<const PatientId> patient_ids, int k, std::uint64_t seed);

std::vector<TaskInstance> build_task_instances(const Dataset& data, TaskSpec task, CohortReport* report = nullptr);

/// Metric names reported for a task, in report order.
std::vector<std::string> metric_names(Task t);

struct FoldResult {
  int fold = 0;
  std::int64_t train_patients = 0;
  std::int64_t test_patients = 0;
  std::int64_t train_instances = 0;
  /// After oversampling (equals train_instances for non-binary tasks).
  std::int64_t train_rows = 0;
  std::int64_t test_instances = 0;
  double final_train_loss = 0.0;
  std::uint64_t vocab_hash = 0;
  /// Metric name -> value, in metric_names() order. Empty when `error` is set.
  std::vector<std::pair<std::string, double>> metrics;
  /// Per-phenotype AUROC (NaN when a label is single-class in the fold).
  std::vector<double> phenotype_auroc;
  std::optional<std::string> error;

  std::optional<double> metric(std::string_view name) const;
};

/// One scored test instance.
struct Prediction {
  int fold = 0;
  StayId stay_id = 0;
  HourRange window;
  /// One entry per head output.
  std::vector<double> label;
  std::vector<double> score;
};

struct EvalReport {
  std::string task;
  std::string model;
  std::vector<std::pair<std::string, std::string>> config;
  std::uint64_t seed = 0;
  int folds = 0;
  std::int64_t cohort_stays = 0;
  std::int64_t cohort_patients = 0;
  std::int64_t instances = 0;
  int input_width = 0;
  std::int64_t parameters = 0;
  std::vector<FoldResult> fold_results;
  /// Metric -> aggregate over the folds without errors.
  std::vector<std::pair<std::string, FoldAggregate>> aggregate;
  std::vector<std::string> warnings;
  /// Not serialised to JSON so reruns compare byte-for-byte.
  double wall_clock_seconds = 0.0;
  /// Test-fold predictions in fold order; written to predictions.csv.
  std::vector<Prediction> predictions;

  /// Values of one metric over the successful folds.
  std::vector<double> fold_values(std::string_view metric) const;
};

/// Cross-validates `cfg` on an already-loaded dataset.
EvalReport run_experiment(const ExperimentConfig& cfg, const Dataset& data);

/// Loads cfg.data_dir, runs, and (when out_dir is set) writes report.json,
/// report.txt and the ingestion / cohort audit files under a lock file.
EvalReport run_experiment(const ExperimentConfig& cfg);

LoadOptions load_options(const ExperimentConfig& cfg);

// --- reports ---------------------------------------------------------------

std::string report_json(const EvalReport& report);
EvalReport parse_report_json(std::string_view text);
EvalReport read_report(const std::filesystem::path& path);
std::string report_text(const EvalReport& report);
/// fold,stay_id,window_start,window_end,label[_k],score[_k]
std::string predictions_csv(const EvalReport& report);

struct ComparisonRow {
  std::string metric;
  FoldAggregate a;
  FoldAggregate b;
  TTestResult test;
};

struct Comparison {
  std::string task;
  std::string model_a;
  std::string model_b;
  std::vector<ComparisonRow> rows;

  std::string to_text() const;
};

/// Per-metric t-test across fold values. Throws DataError when the
/// reports differ in task or fold count.
Comparison compare(const EvalReport& a, const EvalReport& b, TTestMode mode = TTestMode::welch);

/// Table 1 style demographics split by hospital outcome: counts,
/// percentages, median [IQR] age and unit LoS. Empty strata render as "—".
std::string summarize_cohort(std::span<const StayMeta> metas, std::span<const HourlyGrid> grids);

/// Base and per-task exclusion flows plus patient / instance counts.
std::string cohort_audit(const Dataset& data);

/// Holds `<dir>/.lock` for the lifetime of the object. Throws ConfigError
/// when the directory is already owned by another run.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace icubench
