#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "icubench/data_model.hpp"

namespace icubench {

/// Parameters of the synthetic eICU-shaped generator. Rates are per stay.
struct SynthConfig {
  std::int64_t n_patients = 1000;
  /// Unit stay length in whole hours, drawn uniformly.
  int hours_min = 12;
  int hours_max = 120;
  /// Probability that a scheduled measurement is not charted, per variable
  /// in canonical order. Static patient-table fields use it as the
  /// probability of an empty cell.
  std::array<double, kNumVariables> missingness{};
  double mortality_rate = 0.083;
  /// Fraction of stays ending in death in the unit (decompensation events);
  /// must not exceed mortality_rate.
  double decomp_rate = 0.065;
  double signal_strength = 1.0;
  std::uint64_t seed = 1;

  /// Fraction of patients with a second unit stay.
  double multi_stay_fraction = 0.1;
  /// Fraction of stays with age 16-18 (cohort exclusion).
  double underage_fraction = 0.02;
  /// Fraction of stays charted with fewer than 15 records (cohort exclusion).
  double sparse_fraction = 0.02;
  /// Fraction of stays with an empty hospital discharge status.
  double missing_status_fraction = 0.01;
  /// Fraction of charted values written as an unparseable string.
  double unparseable_fraction = 0.005;
  /// Per-category phenotype prevalence, canonical category order.
  std::array<double, kNumPhenotypes> phenotype_prevalence{};

  SynthConfig();
  /// Throws ConfigError on out-of-range fields.
  void validate() const;
};

/// Ground truth the generator knows about what it wrote.
struct SynthSummary {
  std::int64_t patients = 0;
  std::int64_t stays = 0;
  std::int64_t expired = 0;
  std::int64_t died_in_unit = 0;
  std::int64_t missing_status = 0;
  /// Exclusions in cohort rule order: age first, then record count.
  std::int64_t excluded_age = 0;
  std::int64_t excluded_records = 0;
  std::int64_t lab_rows = 0;
  std::int64_t nursecharting_rows = 0;
  std::int64_t mapped_records = 0;
  std::int64_t unmapped_rows = 0;
  std::int64_t diagnosis_rows = 0;

  std::string to_text() const;
};

/// Writes patient.csv, lab.csv, nurseCharting.csv, diagnosis.csv,
/// phenotype_catalog.csv and synth_summary.txt into `out_dir`.
/// Output is a pure function of the config.
///
/// Vitals are drawn from truncated Gaussians around the normal-value table
/// with a per-stay baseline offset. Stays that end in hospital death get a
/// planted pattern scaled by signal_strength: heart rate and respiratory
/// rate drift upward and GCS downward over the first 12 hours, plus a
/// second ramp over the final 24 hours of the stay.
SynthSummary generate(const SynthConfig& cfg, const std::filesystem::path& out_dir);

/// Catalog used by the generator: two ICD-9 codes per category.
PhenotypeCatalog synthetic_catalog();

}  // namespace icubench
