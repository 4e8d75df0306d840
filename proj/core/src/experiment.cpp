#include "icubench/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "icubench/errors.hpp"
#include "icubench/neural/trainer.hpp"
#include "text_util.hpp"

namespace icubench {

namespace fs = std::filesystem;

std::string_view task_spec_name(TaskSpec t) {
  switch (t) {
    case TaskSpec::mortality24:
      return "mortality24";
    case TaskSpec::mortality48:
      return "mortality48";
    case TaskSpec::los:
      return "los";
    case TaskSpec::phenotyping:
      return "phenotyping";
    case TaskSpec::decompensation:
      return "decompensation";
  }
  return "?";
}

std::optional<TaskSpec> task_spec_from(std::string_view name) {
  for (auto t : {TaskSpec::mortality24, TaskSpec::mortality48, TaskSpec::los, TaskSpec::phenotyping,
                 TaskSpec::decompensation}) {
    if (task_spec_name(t) == name) return t;
  }
  return std::nullopt;
}

Task task_of(TaskSpec t) {
  switch (t) {
    case TaskSpec::mortality24:
    case TaskSpec::mortality48:
      return Task::mortality;
    case TaskSpec::los:
      return Task::los;
    case TaskSpec::phenotyping:
      return Task::phenotyping;
    case TaskSpec::decompensation:
      return Task::decompensation;
  }
  return Task::mortality;
}

bool is_binary(Task t) { return t == Task::mortality || t == Task::decompensation; }

// --- config ----------------------------------------------------------------

namespace {

std::string str(std::string_view s) { return std::string(s); }

int to_int(std::string_view key, std::string_view v) {
  const auto x = detail::parse_int(v);
  if (!x || *x < std::numeric_limits<int>::min() || *x > std::numeric_limits<int>::max()) {
    throw ConfigError("config: '" + str(key) + "' expects an integer, got '" + str(v) + "'");
  }
  return static_cast<int>(*x);
}

double to_double(std::string_view key, std::string_view v) {
  const auto x = detail::parse_double(v);
  if (!x || !std::isfinite(*x)) throw ConfigError("config: '" + str(key) + "' expects a number, got '" + str(v) + "'");
  return *x;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config: '" + str(key) + "' expects true/false, got '" + str(v) + "'");
}

template <typename T>
T require(std::optional<T> x, std::string_view key, std::string_view v) {
  if (!x) throw ConfigError("config: invalid value '" + str(v) + "' for '" + str(key) + "'");
  return *x;
}

std::string_view encoding_name(nn::Encoding e) { return e == nn::Encoding::ohe ? "ohe" : "embedding"; }

std::string_view readout_name(const std::optional<nn::Readout>& r) {
  if (!r) return "auto";
  return *r == nn::Readout::summary ? "summary" : "last_step";
}

}  // namespace

void ExperimentConfig::set(std::string_view key, std::string_view raw) {
  const auto v = detail::trim(raw);
  if (key == "task") {
    task = require(task_spec_from(v), key, v);
  } else if (key == "model") {
    model = require(nn::model_kind_from(v), key, v);
  } else if (key == "encoding") {
    if (v == "ohe") {
      encoding = nn::Encoding::ohe;
    } else if (v == "embedding") {
      encoding = nn::Encoding::embedding;
    } else {
      throw ConfigError("config: invalid value '" + str(v) + "' for 'encoding'");
    }
  } else if (key == "variables") {
    variables = require(variable_set_from(v), key, v);
  } else if (key == "folds") {
    folds = to_int(key, v);
  } else if (key == "seed") {
    const auto x = detail::parse_int(v);
    if (!x || *x < 0) throw ConfigError("config: 'seed' expects a non-negative integer");
    seed = static_cast<std::uint64_t>(*x);
  } else if (key == "hidden") {
    hidden = to_int(key, v);
  } else if (key == "ann_hidden") {
    ann_hidden = to_int(key, v);
  } else if (key == "embed_dim") {
    embed_dim = to_int(key, v);
  } else if (key == "embedding_init") {
    if (v == "random") {
      embedding_init = nn::EmbeddingInit::random;
    } else if (v == "identity") {
      embedding_init = nn::EmbeddingInit::identity;
    } else {
      throw ConfigError("config: invalid value '" + str(v) + "' for 'embedding_init'");
    }
  } else if (key == "freeze_embeddings") {
    freeze_embeddings = to_bool(key, v);
  } else if (key == "readout") {
    if (v == "auto") {
      readout.reset();
    } else if (v == "summary") {
      readout = nn::Readout::summary;
    } else if (v == "last_step") {
      readout = nn::Readout::last_step;
    } else {
      throw ConfigError("config: invalid value '" + str(v) + "' for 'readout'");
    }
  } else if (key == "epochs") {
    epochs = to_int(key, v);
  } else if (key == "batch_size") {
    batch_size = to_int(key, v);
  } else if (key == "learning_rate") {
    learning_rate = to_double(key, v);
  } else if (key == "beta1") {
    beta1 = to_double(key, v);
  } else if (key == "beta2") {
    beta2 = to_double(key, v);
  } else if (key == "adam_epsilon") {
    adam_epsilon = to_double(key, v);
  } else if (key == "standardize") {
    standardize = to_bool(key, v);
  } else if (key == "aggregator") {
    if (v == "mean_fallback") {
      aggregator = Aggregator::mean_fallback;
    } else if (v == "last_valid") {
      aggregator = Aggregator::last_valid;
    } else {
      throw ConfigError("config: invalid value '" + str(v) + "' for 'aggregator'");
    }
  } else if (key == "impute") {
    if (v == "carry_forward") {
      impute = ImputeMode::carry_forward_then_normal;
    } else if (v == "normal") {
      impute = ImputeMode::normal_only;
    } else {
      throw ConfigError("config: invalid value '" + str(v) + "' for 'impute'");
    }
  } else if (key == "max_hours") {
    max_hours = to_int(key, v);
  } else if (key == "schema_file") {
    schema_file = fs::path(str(v));
  } else if (key == "catalog") {
    catalog = fs::path(str(v));
  } else if (key == "ttest") {
    ttest = require(t_test_mode_from(v), key, v);
  } else if (key == "threads") {
    threads = to_int(key, v);
  } else if (key == "data_dir") {
    data_dir = fs::path(str(v));
  } else if (key == "out_dir") {
    out_dir = fs::path(str(v));
  } else {
    throw ConfigError("config: unknown key '" + str(key) + "'");
  }
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  const auto d = [](double x) { return detail::format_double(x); };
  return {
      {"task", str(task_spec_name(task))},
      {"model", str(nn::model_kind_name(model))},
      {"encoding", str(encoding_name(encoding))},
      {"variables", str(variable_set_name(variables))},
      {"folds", std::to_string(folds)},
      {"seed", std::to_string(seed)},
      {"hidden", std::to_string(hidden)},
      {"ann_hidden", std::to_string(ann_hidden)},
      {"embed_dim", std::to_string(embed_dim)},
      {"embedding_init", embedding_init == nn::EmbeddingInit::identity ? "identity" : "random"},
      {"freeze_embeddings", freeze_embeddings ? "true" : "false"},
      {"readout", str(readout_name(readout))},
      {"epochs", std::to_string(epochs)},
      {"batch_size", std::to_string(batch_size)},
      {"learning_rate", d(learning_rate)},
      {"beta1", d(beta1)},
      {"beta2", d(beta2)},
      {"adam_epsilon", d(adam_epsilon)},
      {"standardize", standardize ? "true" : "false"},
      {"aggregator", aggregator == Aggregator::last_valid ? "last_valid" : "mean_fallback"},
      {"impute", impute == ImputeMode::normal_only ? "normal" : "carry_forward"},
      {"max_hours", std::to_string(max_hours)},
      {"schema_file", schema_file.string()},
      {"catalog", catalog.string()},
      {"ttest", str(t_test_mode_name(ttest))},
      {"threads", std::to_string(threads)},
      {"data_dir", data_dir.string()},
      {"out_dir", out_dir.string()},
  };
}

void ExperimentConfig::validate() const {
  if (folds < 2) throw ConfigError("config: folds must be at least 2");
  if (hidden < 1 || ann_hidden < 1) throw ConfigError("config: hidden widths must be positive");
  if (embed_dim < 0) throw ConfigError("config: embed_dim must be non-negative");
  if (epochs < 0) throw ConfigError("config: epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("config: batch_size must be positive");
  if (!(learning_rate > 0)) throw ConfigError("config: learning_rate must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("config: betas must lie in [0, 1)");
  if (!(adam_epsilon > 0)) throw ConfigError("config: adam_epsilon must be positive");
  if (max_hours < 1) throw ConfigError("config: max_hours must be positive");
  if (threads < 0) throw ConfigError("config: threads must be non-negative");
  if (embedding_init == nn::EmbeddingInit::identity && embed_dim != 0) {
    throw ConfigError("config: identity embeddings take their width from the vocabulary; leave embed_dim at 0");
  }
}

void apply_config_text(ExperimentConfig& cfg, std::string_view text) {
  int line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    cfg.set(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
}

void apply_config_file(ExperimentConfig& cfg, const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  apply_config_text(cfg, detail::read_file(path));
}

LoadOptions load_options(const ExperimentConfig& cfg) {
  LoadOptions o;
  if (!cfg.schema_file.empty()) o.schema = read_schema_config(cfg.schema_file);
  o.policy.aggregator = cfg.aggregator;
  o.policy.impute = cfg.impute;
  o.policy.max_hours = cfg.max_hours;
  o.catalog = cfg.catalog;
  return o;
}

// --- folds -----------------------------------------------------------------

std::map<PatientId, int> make_folds(std::span<const PatientId> patient_ids, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("folds: k must be at least 2");
  std::vector<PatientId> patients(patient_ids.begin(), patient_ids.end());
  std::sort(patients.begin(), patients.end());
  patients.erase(std::unique(patients.begin(), patients.end()), patients.end());
  if (patients.size() < static_cast<std::size_t>(k)) {
    throw ConfigError("folds: " + std::to_string(patients.size()) + " patients cannot fill " + std::to_string(k) +
                      " folds");
  }
  auto rng = Rng::substream(seed, 0xf01d);
  rng.shuffle(patients);
  std::map<PatientId, int> folds;
  for (std::size_t i = 0; i < patients.size(); ++i) folds[patients[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  return folds;
}

std::vector<TaskInstance> build_task_instances(const Dataset& data, TaskSpec task, CohortReport* report) {
  switch (task) {
    case TaskSpec::mortality24:
      return build_mortality_instances(data.metas, data.grids, 24, report);
    case TaskSpec::mortality48:
      return build_mortality_instances(data.metas, data.grids, 48, report);
    case TaskSpec::los:
      return build_los_instances(data.metas, data.grids, report);
    case TaskSpec::phenotyping:
      return build_phenotype_instances(data.metas, data.grids, data.diagnoses, data.catalog, report);
    case TaskSpec::decompensation:
      return build_decomp_instances(data.metas, data.grids, report);
  }
  return {};
}

std::vector<std::string> metric_names(Task t) {
  if (t == Task::los) return {"r2", "mae"};
  return {"auroc", "auprc", "specificity", "sensitivity", "ppv", "npv"};
}

std::optional<double> FoldResult::metric(std::string_view name) const {
  for (const auto& [k, v] : metrics) {
    if (k == name) return v;
  }
  return std::nullopt;
}

std::vector<double> EvalReport::fold_values(std::string_view metric) const {
  std::vector<double> out;
  for (const auto& f : fold_results) {
    if (f.error) continue;
    if (auto v = f.metric(metric); v && !std::isnan(*v)) out.push_back(*v);
  }
  return out;
}

// --- experiment ------------------------------------------------------------

namespace {

/// Which stays each fold-derived artifact was computed from.
struct FoldProvenance {
  std::set<StayId> vocab_source;
  std::set<StayId> standardizer_source;
  std::set<StayId> oversample_source;
};

void assert_leak_free(const Dataset& data, const std::vector<TaskInstance>& train,
                      const std::vector<TaskInstance>& test, const FoldProvenance& prov) {
  std::set<PatientId> train_patients, test_patients;
  std::set<StayId> train_stays;
  for (const auto& i : train) {
    train_patients.insert(data.meta(i.stay_id).patient_id);
    train_stays.insert(i.stay_id);
  }
  for (const auto& i : test) test_patients.insert(data.meta(i.stay_id).patient_id);
  for (const auto& p : test_patients) {
    if (train_patients.count(p)) throw std::logic_error("fold leak: patient " + p + " is in both train and test");
  }
  const auto check = [&](const std::set<StayId>& source, const char* what) {
    for (auto s : source) {
      if (!train_stays.count(s)) {
        throw std::logic_error(std::string("fold leak: ") + what + " derived from non-training stay " +
                               std::to_string(s));
      }
    }
  };
  check(prov.vocab_source, "vocabulary");
  check(prov.standardizer_source, "standardizer");
  check(prov.oversample_source, "oversampling");
}

struct FoldOutput {
  FoldResult result;
  std::vector<Prediction> predictions;
  int input_width = 0;
  std::int64_t parameters = 0;
};

void score_fold(Task task, const nn::Mat& pred, const nn::Mat& labels, FoldResult& r) {
  const auto n = static_cast<std::size_t>(pred.cols());
  if (task == Task::los) {
    std::vector<double> p(n), y(n);
    for (std::size_t j = 0; j < n; ++j) {
      p[j] = pred(0, static_cast<Eigen::Index>(j));
      y[j] = labels(0, static_cast<Eigen::Index>(j));
    }
    const auto m = regression_metrics(p, y);
    if (!m.r2) throw UndefinedMetricError("R2 undefined: constant test targets");
    r.metrics = {{"r2", *m.r2}, {"mae", m.mae}};
    return;
  }
  const auto rows = pred.rows();
  std::vector<ClassificationMetrics> per_label;
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (Eigen::Index k = 0; k < rows; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = pred(k, static_cast<Eigen::Index>(j));
      y[j] = labels(k, static_cast<Eigen::Index>(j)) > 0.5 ? 1 : 0;
    }
    if (task == Task::phenotyping) {
      try {
        per_label.push_back(classification_metrics(s, y));
        r.phenotype_auroc.push_back(per_label.back().auroc);
      } catch (const UndefinedMetricError&) {
        r.phenotype_auroc.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    } else {
      per_label.push_back(classification_metrics(s, y));
    }
  }
  if (per_label.empty()) throw UndefinedMetricError("no phenotype label has both classes in the test fold");
  // macro average over labels with defined metrics
  const auto avg = [&](auto field) {
    double sum = 0.0;
    int count = 0;
    for (const auto& m : per_label) {
      const double v = field(m);
      if (!std::isnan(v)) {
        sum += v;
        ++count;
      }
    }
    return count ? sum / count : std::numeric_limits<double>::quiet_NaN();
  };
  r.metrics = {
      {"auroc", avg([](const ClassificationMetrics& m) { return m.auroc; })},
      {"auprc", avg([](const ClassificationMetrics& m) { return m.auprc; })},
      {"specificity", avg([](const ClassificationMetrics& m) { return m.specificity; })},
      {"sensitivity", kTargetSensitivity},
      {"ppv", avg([](const ClassificationMetrics& m) { return m.ppv; })},
      {"npv", avg([](const ClassificationMetrics& m) { return m.npv; })},
  };
}

FoldOutput run_fold(const ExperimentConfig& cfg, const Dataset& data, const std::vector<TaskInstance>& instances,
                    const std::map<PatientId, int>& folds, int f) {
  FoldOutput out;
  FoldResult& r = out.result;
  r.fold = f;
  const Task task = task_of(cfg.task);

  std::vector<TaskInstance> train, test;
  std::set<PatientId> train_patients, test_patients;
  for (const auto& inst : instances) {
    const auto& pid = data.meta(inst.stay_id).patient_id;
    if (folds.at(pid) == f) {
      test.push_back(inst);
      test_patients.insert(pid);
    } else {
      train.push_back(inst);
      train_patients.insert(pid);
    }
  }
  r.train_patients = static_cast<std::int64_t>(train_patients.size());
  r.test_patients = static_cast<std::int64_t>(test_patients.size());
  r.train_instances = static_cast<std::int64_t>(train.size());
  r.test_instances = static_cast<std::int64_t>(test.size());
  if (train.empty() || test.empty()) {
    r.error = "fold has no " + std::string(train.empty() ? "training" : "test") + " instances";
    return out;
  }

  FoldProvenance prov;
  std::vector<const HourlyGrid*> train_grids;
  for (const auto& inst : train) {
    if (prov.vocab_source.insert(inst.stay_id).second) train_grids.push_back(&data.grid(inst.stay_id));
  }
  const auto vocabs = build_vocabs(train_grids, data.dict);
  r.vocab_hash = vocabs.hash();
  Standardizer standardizer = Standardizer::identity();
  if (cfg.standardize) {
    standardizer = Standardizer::fit(train_grids);
    prov.standardizer_source = prov.vocab_source;
  }
  if (is_binary(task)) {
    auto rng = Rng::substream(cfg.seed, 100 + static_cast<std::uint64_t>(f));
    train = oversample(train, rng);
    for (const auto& inst : train) prov.oversample_source.insert(inst.stay_id);
  }
  r.train_rows = static_cast<std::int64_t>(train.size());
  assert_leak_free(data, train, test, prov);

  GridSource train_src(data, std::move(train), vocabs, standardizer);
  GridSource test_src(data, std::move(test), vocabs, standardizer);

  nn::ModelConfig mc;
  mc.kind = cfg.model;
  mc.task = task;
  mc.input = nn::input_spec(cfg.variables != VariableSet::categorical_only, cfg.variables != VariableSet::numerical_only,
                            cfg.encoding, vocabs.sizes());
  mc.input.init = cfg.embedding_init;
  mc.input.freeze_embeddings = cfg.freeze_embeddings;
  if (cfg.embed_dim > 0) mc.input.embed_dims.assign(kNumCategorical, cfg.embed_dim);
  mc.lstm_hidden = cfg.hidden;
  mc.ann_hidden = cfg.ann_hidden;
  mc.readout = cfg.readout;
  mc.seed = Rng::substream(cfg.seed, 200 + static_cast<std::uint64_t>(f)).next_u64();
  nn::Model model(mc);
  out.input_width = model.input_width();
  out.parameters = static_cast<std::int64_t>(model.params().trainable_size());

  nn::TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.adam = {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_epsilon};
  tc.seed = Rng::substream(cfg.seed, 300 + static_cast<std::uint64_t>(f)).next_u64();

  std::vector<std::size_t> train_idx(train_src.size());
  std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});
  const auto history = nn::fit(model, train_src, train_idx, tc);
  r.final_train_loss = history.epoch_loss.empty() ? std::numeric_limits<double>::quiet_NaN() : history.epoch_loss.back();

  std::vector<std::size_t> test_idx(test_src.size());
  std::iota(test_idx.begin(), test_idx.end(), std::size_t{0});
  const auto pred = nn::predict(model, test_src, test_idx);
  const auto labels = test_src.labels(test_idx);
  for (std::size_t j = 0; j < test_idx.size(); ++j) {
    const auto& inst = test_src.instances()[j];
    const auto col = static_cast<Eigen::Index>(j);
    Prediction p{f, inst.stay_id, inst.window, {}, {}};
    for (Eigen::Index k = 0; k < pred.rows(); ++k) {
      p.label.push_back(labels(k, col));
      p.score.push_back(pred(k, col));
    }
    out.predictions.push_back(std::move(p));
  }
  try {
    score_fold(task, pred, labels, r);
  } catch (const UndefinedMetricError& e) {
    r.metrics.clear();
    r.error = e.what();
  }
  return out;
}

}  // namespace

EvalReport run_experiment(const ExperimentConfig& cfg, const Dataset& data) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  EvalReport report;
  report.task = str(task_spec_name(cfg.task));
  report.model = str(nn::model_kind_name(cfg.model));
  for (auto& [k, v] : cfg.entries()) {
    if (k == "threads" || k == "out_dir") continue;
    report.config.emplace_back(k, v);
  }
  report.seed = cfg.seed;
  report.folds = cfg.folds;

  const auto instances = build_task_instances(data, cfg.task);
  if (instances.empty()) throw DataError("task " + report.task + " has no instances in this dataset");
  report.instances = static_cast<std::int64_t>(instances.size());
  std::set<StayId> stays;
  std::set<PatientId> patients;
  for (const auto& i : instances) {
    stays.insert(i.stay_id);
    patients.insert(data.meta(i.stay_id).patient_id);
  }
  report.cohort_stays = static_cast<std::int64_t>(stays.size());
  report.cohort_patients = static_cast<std::int64_t>(patients.size());

  // one fold assignment per base cohort, shared by every task
  std::vector<PatientId> base_patients;
  for (const auto& m : data.metas) base_patients.push_back(m.patient_id);
  const auto folds = make_folds(base_patients, cfg.folds, cfg.seed);

  std::vector<FoldOutput> outputs(static_cast<std::size_t>(cfg.folds));
  std::vector<std::exception_ptr> errors(outputs.size());
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const int workers = std::min(cfg.folds, cfg.threads > 0 ? cfg.threads : hw);
  std::mutex next_mutex;
  int next = 0;
  const auto work = [&] {
    for (;;) {
      int f;
      {
        std::lock_guard lock(next_mutex);
        if (next >= cfg.folds) return;
        f = next++;
      }
      try {
        outputs[f] = run_fold(cfg, data, instances, folds, f);
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (auto& o : outputs) {
    if (o.input_width > 0 && report.input_width == 0) {
      report.input_width = o.input_width;
      report.parameters = o.parameters;
    }
    if (o.result.error) {
      report.warnings.push_back("fold " + std::to_string(o.result.fold) + " excluded: " + *o.result.error);
    }
    report.fold_results.push_back(std::move(o.result));
    report.predictions.insert(report.predictions.end(), std::make_move_iterator(o.predictions.begin()),
                              std::make_move_iterator(o.predictions.end()));
  }
  for (const auto& name : metric_names(task_of(cfg.task))) {
    const auto values = report.fold_values(name);
    if (values.size() < 2) {
      report.warnings.push_back("metric " + name + ": fewer than two folds with a defined value, no aggregate");
      continue;
    }
    report.aggregate.emplace_back(name, aggregate_folds(values));
  }
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

EvalReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.data_dir.empty()) throw ConfigError("config: data_dir is required");
  std::optional<RunLock> lock;
  if (!cfg.out_dir.empty()) lock.emplace(cfg.out_dir);
  const auto start = std::chrono::steady_clock::now();
  const auto data = load_dataset(cfg.data_dir, load_options(cfg));
  auto report = run_experiment(cfg, data);
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!cfg.out_dir.empty()) {
    const auto write = [&](const char* name, const std::string& text) {
      std::ofstream out(cfg.out_dir / name, std::ios::binary | std::ios::trunc);
      if (!out) throw DataError("cannot write " + (cfg.out_dir / name).string());
      out << text;
    };
    write("ingestion.txt", data.ingestion.to_text());
    write("cohort.txt", cohort_audit(data) + "\n" + summarize_cohort(data.metas, data.grids));
    write("report.json", report_json(report));
    write("report.txt", report_text(report));
    write("predictions.csv", predictions_csv(report));
  }
  return report;
}

RunLock::RunLock(const fs::path& dir) : path_(dir / ".lock") {
  fs::create_directories(dir);
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) throw ConfigError("run directory " + dir.string() + " is locked by another run (remove .lock if stale)");
  std::fclose(f);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

}  // namespace icubench
