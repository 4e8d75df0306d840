#include <doctest.h>

#include <set>

#include "icubench/errors.hpp"
#include "icubench/experiment.hpp"
#include "icubench/synth.hpp"
#include "support.hpp"

using namespace icubench;

namespace {

/// One small synthetic corpus shared by the tests in this file.
const Dataset& corpus() {
  static testing::TempDir dir("corpus");
  static const Dataset data = [] {
    SynthConfig cfg;
    cfg.n_patients = 160;
    cfg.seed = 8;
    cfg.mortality_rate = 0.25;
    cfg.decomp_rate = 0.2;
    generate(cfg, dir.path());
    return load_dataset(dir.path());
  }();
  return data;
}

ExperimentConfig quick(TaskSpec task, nn::ModelKind model) {
  ExperimentConfig cfg;
  cfg.task = task;
  cfg.model = model;
  cfg.folds = 3;
  cfg.hidden = 4;
  cfg.ann_hidden = 4;
  cfg.epochs = 2;
  cfg.batch_size = 64;
  cfg.threads = 2;
  return cfg;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("config keys round-trip through set and entries") {
    ExperimentConfig cfg;
    for (const auto& [k, v] : cfg.entries()) {
      CAPTURE(k);
      ExperimentConfig copy;
      CHECK_NOTHROW(copy.set(k, v));
    }
    cfg.set("task", "decompensation");
    cfg.set("model", "ann");
    cfg.set("encoding", "ohe");
    cfg.set("variables", "categorical_only");
    cfg.set("epochs", "3");
    cfg.set("learning_rate", "0.01");
    cfg.set("standardize", "true");
    cfg.set("readout", "last_step");
    CHECK(cfg.task == TaskSpec::decompensation);
    CHECK(cfg.model == nn::ModelKind::ann);
    CHECK(cfg.encoding == nn::Encoding::ohe);
    CHECK(cfg.variables == VariableSet::categorical_only);
    CHECK(cfg.epochs == 3);
    CHECK(cfg.learning_rate == 0.01);
    CHECK(cfg.standardize);
    CHECK(cfg.readout == nn::Readout::last_step);
    ExperimentConfig again;
    for (const auto& [k, v] : cfg.entries()) again.set(k, v);
    CHECK(again.entries() == cfg.entries());

    CHECK_THROWS_AS(cfg.set("colour", "red"), ConfigError);
    CHECK_THROWS_AS(cfg.set("epochs", "many"), ConfigError);
    CHECK_THROWS_AS(cfg.set("task", "sepsis"), ConfigError);
    CHECK_THROWS_AS(cfg.set("standardize", "maybe"), ConfigError);
    cfg.folds = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("config text") {
    ExperimentConfig cfg;
    apply_config_text(cfg, "# comment\n\ntask = los\n  hidden=16  \nseed = 9\n");
    CHECK(cfg.task == TaskSpec::los);
    CHECK(cfg.hidden == 16);
    CHECK(cfg.seed == 9);
    CHECK_THROWS_AS(apply_config_text(cfg, "hidden 16\n"), ConfigError);
    CHECK_THROWS_AS(apply_config_file(cfg, "/nonexistent/run.cfg"), ConfigError);
  }

  TEST_CASE("task specs") {
    CHECK(task_spec_from("mortality48") == TaskSpec::mortality48);
    CHECK(task_of(TaskSpec::mortality24) == Task::mortality);
    CHECK(task_spec_name(TaskSpec::phenotyping) == "phenotyping");
    CHECK(is_binary(Task::decompensation));
    CHECK_FALSE(is_binary(Task::phenotyping));
    CHECK(metric_names(Task::los) == std::vector<std::string>{"r2", "mae"});
    CHECK(metric_names(Task::mortality).size() == 6);
  }

  TEST_CASE("folds keep a patient's stays together") {
    std::vector<PatientId> ids;
    for (int i = 0; i < 10; ++i) ids.push_back("P" + std::to_string(i));
    const auto folds = make_folds(ids, 5, 1);
    std::map<int, int> sizes;
    for (const auto& [p, f] : folds) ++sizes[f];
    CHECK(sizes.size() == 5);
    for (const auto& [f, n] : sizes) CHECK(n == 2);

    std::vector<PatientId> dup = ids;
    dup.push_back("P3");
    dup.push_back("P3");
    CHECK(make_folds(dup, 5, 1) == folds);
    std::vector<PatientId> shuffled(ids.rbegin(), ids.rend());
    CHECK(make_folds(shuffled, 5, 1) == folds);
    CHECK(make_folds(ids, 5, 2) != folds);
    CHECK_THROWS_AS(make_folds(ids, 1, 1), ConfigError);
    CHECK_THROWS_AS(make_folds(ids, 11, 1), ConfigError);

    std::vector<PatientId> odd;
    for (int i = 0; i < 13; ++i) odd.push_back("Q" + std::to_string(i));
    std::map<int, int> odd_sizes;
    for (const auto& [p, f] : make_folds(odd, 5, 3)) ++odd_sizes[f];
    for (const auto& [f, n] : odd_sizes) CHECK((n == 2 || n == 3));
  }

  TEST_CASE("every task runs end to end and reports its metrics") {
    const auto& data = corpus();
    for (auto task : {TaskSpec::mortality24, TaskSpec::mortality48, TaskSpec::los, TaskSpec::phenotyping,
                      TaskSpec::decompensation}) {
      for (auto model : {nn::ModelKind::linear, nn::ModelKind::bilstm}) {
        CAPTURE(task_spec_name(task));
        CAPTURE(model_kind_name(model));
        const auto report = run_experiment(quick(task, model), data);
        CHECK(report.folds == 3);
        CHECK(report.fold_results.size() == 3);
        const auto names = metric_names(task_of(task));
        for (const auto& f : report.fold_results) {
          if (f.error) continue;
          CHECK(f.metrics.size() == names.size());
          if (is_binary(task_of(task))) CHECK(f.train_rows >= f.train_instances);
        }
        REQUIRE(report.aggregate.size() == names.size());
        for (std::size_t i = 0; i < names.size(); ++i) CHECK(report.aggregate[i].first == names[i]);
        CHECK(static_cast<std::int64_t>(report.predictions.size()) == report.instances);
        if (task == TaskSpec::phenotyping) CHECK(report.fold_results[0].phenotype_auroc.size() == kNumPhenotypes);
      }
    }
  }

  TEST_CASE("variable subsets change the input width") {
    const auto& data = corpus();
    auto cfg = quick(TaskSpec::mortality24, nn::ModelKind::linear);
    cfg.variables = VariableSet::numerical_only;
    CHECK(run_experiment(cfg, data).input_width == kNumNumerical);
    cfg.variables = VariableSet::categorical_only;
    cfg.embed_dim = 2;
    CHECK(run_experiment(cfg, data).input_width == 2 * kNumCategorical);
  }

  TEST_CASE("reruns are identical and reports round-trip") {
    const auto& data = corpus();
    auto cfg = quick(TaskSpec::mortality24, nn::ModelKind::bilstm);
    const auto a = run_experiment(cfg, data);
    cfg.threads = 1;
    const auto b = run_experiment(cfg, data);
    CHECK(report_json(a) == report_json(b));
    const auto parsed = parse_report_json(report_json(a));
    CHECK(report_json(parsed) == report_json(a));
    CHECK(report_text(a).find("auroc") != std::string::npos);
    CHECK(predictions_csv(a).rfind("fold,stay_id,window_start,window_end,label,score\n", 0) == 0);
    CHECK_THROWS_AS(parse_report_json("{not json"), DataError);
  }

  TEST_CASE("run writes its reports under a lock") {
    SynthConfig sc;
    sc.n_patients = 80;
    sc.seed = 2;
    testing::TempDir data_dir, out;
    generate(sc, data_dir.path());
    auto cfg = quick(TaskSpec::los, nn::ModelKind::linear);
    cfg.data_dir = data_dir.path();
    cfg.out_dir = out / "run";
    run_experiment(cfg);
    for (const char* f : {"report.json", "report.txt", "ingestion.txt", "cohort.txt", "predictions.csv"}) {
      CAPTURE(f);
      CHECK(std::filesystem::exists(out / "run" / f));
    }
    CHECK_FALSE(std::filesystem::exists(out / "run" / ".lock"));
    const auto first = testing::read_file(out / "run" / "report.json");
    CHECK(first.find("wall") == std::string::npos);
    CHECK(first.find(out.path().string()) == std::string::npos);
    {
      RunLock held(out / "run");
      CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
    }
    run_experiment(cfg);
    CHECK(testing::read_file(out / "run" / "report.json") == first);
    cfg.data_dir = out / "missing";
    CHECK_THROWS_AS(run_experiment(cfg), DataError);
  }

  TEST_CASE("comparison of fold results") {
    EvalReport a, b;
    a.task = b.task = "mortality24";
    a.model = "lr";
    b.model = "bilstm";
    a.folds = b.folds = 5;
    const double va[] = {0.70, 0.71, 0.69, 0.72, 0.70};
    const double vb[] = {0.85, 0.86, 0.84, 0.87, 0.85};
    for (int f = 0; f < 5; ++f) {
      FoldResult ra, rb;
      ra.fold = rb.fold = f;
      ra.metrics = {{"auroc", va[f]}};
      rb.metrics = {{"auroc", vb[f]}};
      a.fold_results.push_back(ra);
      b.fold_results.push_back(rb);
    }
    const auto self = compare(a, a);
    REQUIRE(self.rows.size() == 1);
    CHECK(self.rows[0].test.p == 1.0);
    CHECK(self.rows[0].test.flag().empty());
    const auto c = compare(a, b);
    CHECK(c.rows[0].test.flag() == "†");
    CHECK(c.rows[0].test.t < 0);
    CHECK(c.to_text().find("†") != std::string::npos);
    CHECK(compare(a, b, TTestMode::paired).rows[0].test.df == 4.0);

    b.folds = 3;
    b.fold_results.resize(3);
    CHECK_THROWS_AS(compare(a, b), DataError);
    b = a;
    b.task = "los";
    CHECK_THROWS_AS(compare(a, b), DataError);
  }

  TEST_CASE("cohort summary") {
    const auto& data = corpus();
    const auto text = summarize_cohort(data.metas, data.grids);
    CHECK(text.find("Expired") != std::string::npos);
    CHECK(text.find("Survived") != std::string::npos);
    std::vector<StayMeta> alive;
    std::vector<HourlyGrid> grids;
    for (std::size_t i = 0; i < data.metas.size(); ++i) {
      if (data.metas[i].hospital_discharge_status == DischargeStatus::alive) {
        alive.push_back(data.metas[i]);
        grids.push_back(data.grids[i]);
      }
    }
    CHECK(summarize_cohort(alive, grids).find("—") != std::string::npos);
    CHECK(cohort_audit(data).find("mortality24") != std::string::npos);
  }

  TEST_CASE("synthetic mortality rate falls within binomial bounds") {
    const auto& data = corpus();
    int expired = 0, known = 0;
    for (const auto& m : data.metas) {
      if (m.hospital_discharge_status == DischargeStatus::missing) continue;
      ++known;
      expired += m.hospital_discharge_status == DischargeStatus::expired;
    }
    const double p = 0.25;
    const double rate = static_cast<double>(expired) / known;
    const double half = 3.0 * std::sqrt(p * (1 - p) / known);
    CHECK(rate > p - half);
    CHECK(rate < p + half);
  }
}
