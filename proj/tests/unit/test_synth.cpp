#include <doctest.h>

#include "icubench/dataset.hpp"
#include "icubench/errors.hpp"
#include "icubench/experiment.hpp"
#include "icubench/synth.hpp"
#include "support.hpp"

using namespace icubench;

TEST_SUITE("synth") {
  TEST_CASE("same seed writes byte-identical files") {
    testing::TempDir a, b;
    SynthConfig cfg;
    cfg.n_patients = 60;
    cfg.seed = 1;
    generate(cfg, a.path());
    generate(cfg, b.path());
    for (const char* f : {"patient.csv", "lab.csv", "nurseCharting.csv", "diagnosis.csv", "phenotype_catalog.csv",
                          "synth_summary.txt"}) {
      CAPTURE(f);
      REQUIRE(std::filesystem::exists(a / f));
      CHECK(testing::read_file(a / f) == testing::read_file(b / f));
    }
    cfg.seed = 2;
    testing::TempDir c;
    generate(cfg, c.path());
    CHECK(testing::read_file(a / "lab.csv") != testing::read_file(c / "lab.csv"));
  }

  TEST_CASE("mortality rate stays within its binomial interval") {
    testing::TempDir dir;
    SynthConfig cfg;
    cfg.n_patients = 10000;
    cfg.seed = 3;
    const auto s = generate(cfg, dir.path());
    REQUIRE(s.patients == 10000);
    const double rate = static_cast<double>(s.expired) / static_cast<double>(s.stays);
    CHECK(rate >= 0.075);
    CHECK(rate <= 0.091);
    CHECK(s.died_in_unit <= s.expired);
  }

  TEST_CASE("ingest and cohort reproduce the generator's own counts") {
    testing::TempDir dir;
    SynthConfig cfg;
    cfg.n_patients = 400;
    cfg.seed = 4;
    cfg.underage_fraction = 0.05;
    cfg.sparse_fraction = 0.05;
    const auto s = generate(cfg, dir.path());
    const auto data = load_dataset(dir.path());
    CHECK(data.base.total == s.stays);
    CHECK(data.base.excluded_by("age <= 18") == s.excluded_age);
    CHECK(data.base.excluded_by("fewer than 15 records") == s.excluded_records);
    CHECK(s.excluded_age > 0);
    CHECK(s.excluded_records > 0);
    CHECK(static_cast<std::int64_t>(data.metas.size()) == s.stays - s.excluded_age - s.excluded_records);

    std::set<PatientId> patients;
    for (const auto& m : data.metas) patients.insert(m.patient_id);
    CHECK(static_cast<std::int64_t>(patients.size()) <= s.patients);

    const auto& lab = data.ingestion.tables.at("lab");
    const auto& nc = data.ingestion.tables.at("nurseCharting");
    CHECK(static_cast<std::int64_t>(lab.rows_emitted + nc.rows_emitted) == s.mapped_records);
    CHECK(static_cast<std::int64_t>(lab.filtered_unmapped + nc.filtered_unmapped) == s.unmapped_rows);
    CHECK(static_cast<std::int64_t>(lab.rows_read) == s.lab_rows);
    CHECK(static_cast<std::int64_t>(nc.rows_read) == s.nursecharting_rows);
  }

  TEST_CASE("without a planted signal a logistic model is at chance") {
    testing::TempDir dir;
    SynthConfig sc;
    sc.n_patients = 2000;
    sc.seed = 5;
    sc.signal_strength = 0.0;
    generate(sc, dir.path());
    ExperimentConfig cfg;
    cfg.model = nn::ModelKind::linear;
    cfg.threads = 1;
    const auto report = run_experiment(cfg, load_dataset(dir.path()));
    const auto values = report.fold_values("auroc");
    REQUIRE(values.size() == 5);
    double mean = 0;
    for (double v : values) mean += v / 5.0;
    CHECK(mean > 0.45);
    CHECK(mean < 0.55);
  }

  TEST_CASE("configuration is validated") {
    SynthConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.decomp_rate = 0.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SynthConfig{};
    cfg.signal_strength = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SynthConfig{};
    cfg.missingness[0] = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SynthConfig{};
    cfg.hours_min = 50;
    cfg.hours_max = 20;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("synthetic catalog maps two codes to every category") {
    const auto catalog = synthetic_catalog();
    std::vector<int> per(kNumPhenotypes, 0);
    for (const auto& [code, cat] : catalog.code_map) ++per.at(cat);
    for (int n : per) CHECK(n == 2);
  }
}
