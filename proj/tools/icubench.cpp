// icubench: synthetic data, cohort audits, cross-validated runs and report
// comparison from the command line.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "icubench/dataset.hpp"
#include "icubench/errors.hpp"
#include "icubench/experiment.hpp"
#include "icubench/synth.hpp"

namespace fs = std::filesystem;
using namespace icubench;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kRuntime = 4 };

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

struct SynthArgs {
  std::int64_t patients = 1000;
  std::uint64_t seed = 1;
  fs::path out;
  double signal = 1.0;
  double mortality = -1;
  double decomp = -1;
  double missingness = -1;
  int hours_min = -1;
  int hours_max = -1;
};

int cmd_synth(const SynthArgs& a) {
  SynthConfig cfg;
  cfg.n_patients = a.patients;
  cfg.seed = a.seed;
  cfg.signal_strength = a.signal;
  if (a.mortality >= 0) cfg.mortality_rate = a.mortality;
  if (a.decomp >= 0) cfg.decomp_rate = a.decomp;
  if (a.hours_min > 0) cfg.hours_min = a.hours_min;
  if (a.hours_max > 0) cfg.hours_max = a.hours_max;
  if (a.missingness >= 0) {
    for (int v = 0; v < kNumVariables; ++v) {
      const auto var = static_cast<Var>(v);
      // patient-table fields keep their own empty-cell rates
      if (var == Var::Age || var == Var::Height || var == Var::Weight || var == Var::Gender ||
          var == Var::Ethnicity || var == Var::AdmissionDiagnosis) {
        continue;
      }
      cfg.missingness[v] = a.missingness;
    }
  }
  cfg.validate();
  const auto summary = generate(cfg, a.out);
  std::cout << summary.to_text();
  return kOk;
}

int cmd_cohort(const fs::path& data_dir, const fs::path& out, const fs::path& config) {
  ExperimentConfig cfg;
  if (!config.empty()) apply_config_file(cfg, config);
  const auto data = load_dataset(data_dir, load_options(cfg));
  const auto audit = cohort_audit(data);
  const auto summary = summarize_cohort(data.metas, data.grids);
  if (!out.empty()) {
    fs::create_directories(out);
    write_text(out / "ingestion.txt", data.ingestion.to_text());
    write_text(out / "cohort.txt", audit + "\n" + summary);
  }
  std::cout << data.ingestion.to_text() << '\n' << audit << '\n' << summary;
  return kOk;
}

int cmd_run(ExperimentConfig cfg, const fs::path& config, const std::vector<std::pair<std::string, std::string>>& flags,
            const std::vector<std::string>& sets) {
  if (!config.empty()) apply_config_file(cfg, config);
  for (const auto& [k, v] : flags) cfg.set(k, v);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  const auto report = run_experiment(cfg);
  std::cout << report_text(report);
  if (!cfg.out_dir.empty()) std::cout << "\nreport written to " << (cfg.out_dir / "report.json").string() << '\n';
  return kOk;
}

int cmd_compare(const fs::path& a, const fs::path& b, const std::string& mode, const fs::path& out) {
  const auto m = t_test_mode_from(mode);
  if (!m) throw ConfigError("--mode must be welch or paired");
  const auto c = compare(read_report(a), read_report(b), *m);
  const auto text = c.to_text();
  if (!out.empty()) write_text(out, text);
  std::cout << text;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ICU benchmarking engine: eICU-shaped ingestion, cohorts, models and evaluation"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* sc_synth = app.add_subcommand("synth", "Generate a synthetic eICU-shaped corpus");
  sc_synth->add_option("--patients", synth.patients, "Number of patients")->check(CLI::PositiveNumber);
  sc_synth->add_option("--seed", synth.seed, "Generator seed");
  sc_synth->add_option("--out", synth.out, "Output directory")->required();
  sc_synth->add_option("--signal", synth.signal, "Planted mortality signal strength (0 = none)");
  sc_synth->add_option("--mortality-rate", synth.mortality, "Hospital mortality rate");
  sc_synth->add_option("--decomp-rate", synth.decomp, "Fraction of stays dying in the unit");
  sc_synth->add_option("--missingness", synth.missingness, "Per-variable missing rate for charted variables");
  sc_synth->add_option("--hours-min", synth.hours_min, "Shortest unit stay in hours");
  sc_synth->add_option("--hours-max", synth.hours_max, "Longest unit stay in hours");

  fs::path cohort_data, cohort_out, cohort_config;
  auto* sc_cohort = app.add_subcommand("cohort", "Ingest a data directory and audit the cohorts");
  sc_cohort->add_option("--data-dir", cohort_data, "Directory with patient/lab/nurseCharting/diagnosis CSVs")->required();
  sc_cohort->add_option("--out", cohort_out, "Directory for ingestion.txt and cohort.txt");
  sc_cohort->add_option("--config", cohort_config, "Config file (preprocessing keys)");

  ExperimentConfig run_cfg;
  fs::path run_config;
  std::string task, model, encoding, variables, data_dir, out_dir;
  int folds = 0;
  std::int64_t seed = -1;
  std::vector<std::string> sets;
  auto* sc_run = app.add_subcommand("run", "Cross-validate one task / model / encoding / variable-set combination");
  sc_run->add_option("--task", task, "mortality24 | mortality48 | los | phenotyping | decompensation");
  sc_run->add_option("--model", model, "lr | ann | bilstm");
  sc_run->add_option("--encoding", encoding, "ohe | embedding");
  sc_run->add_option("--variables", variables, "all | numerical_only | categorical_only");
  sc_run->add_option("--data-dir", data_dir, "Input data directory");
  sc_run->add_option("--folds", folds, "Number of folds");
  sc_run->add_option("--seed", seed, "Seed");
  sc_run->add_option("--config", run_config, "Config file of key = value lines");
  sc_run->add_option("--out", out_dir, "Run directory for reports");
  sc_run->add_option("--set", sets, "Override any config key: --set epochs=5");

  fs::path cmp_a, cmp_b, cmp_out;
  std::string cmp_mode = "welch";
  auto* sc_compare = app.add_subcommand("compare", "t-test two reports fold by fold");
  sc_compare->add_option("report_a", cmp_a, "First report.json")->required()->check(CLI::ExistingFile);
  sc_compare->add_option("report_b", cmp_b, "Second report.json")->required()->check(CLI::ExistingFile);
  sc_compare->add_option("--mode", cmp_mode, "welch | paired");
  sc_compare->add_option("--out", cmp_out, "Write the table to this file too");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*sc_synth) return cmd_synth(synth);
    if (*sc_cohort) return cmd_cohort(cohort_data, cohort_out, cohort_config);
    if (*sc_run) {
      std::vector<std::pair<std::string, std::string>> flags;
      if (!task.empty()) flags.emplace_back("task", task);
      if (!model.empty()) flags.emplace_back("model", model);
      if (!encoding.empty()) flags.emplace_back("encoding", encoding);
      if (!variables.empty()) flags.emplace_back("variables", variables);
      if (!data_dir.empty()) flags.emplace_back("data_dir", data_dir);
      if (!out_dir.empty()) flags.emplace_back("out_dir", out_dir);
      if (folds != 0) flags.emplace_back("folds", std::to_string(folds));
      if (seed >= 0) flags.emplace_back("seed", std::to_string(seed));
      return cmd_run(run_cfg, run_config, flags, sets);
    }
    if (*sc_compare) return cmd_compare(cmp_a, cmp_b, cmp_mode, cmp_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kRuntime;
}
