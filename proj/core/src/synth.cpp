#include "icubench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "icubench/csv.hpp"
#include "icubench/errors.hpp"
#include "icubench/rng.hpp"

namespace icubench {

namespace {

// Prevalence of each phenotype category in the eICU phenotyping cohort.
constexpr std::array<double, kNumPhenotypes> kDefaultPrevalence{
    0.241, 0.156, 0.145, 0.142, 0.120, 0.108, 0.090, 0.079, 0.068, 0.039, 0.030, 0.011, 0.007,
    0.019, 0.203, 0.104, 0.093, 0.054, 0.041, 0.006, 0.165, 0.106, 0.047, 0.039, 0.013};

struct CodePair {
  const char* icd9;
  const char* icd10;  // may be empty
};

constexpr std::array<std::array<CodePair, 2>, kNumPhenotypes> kCodes{{
    {{{"518.81", "J96.00"}, {"799.1", ""}}},
    {{{"276.1", "E87.1"}, {"276.8", "E87.6"}}},
    {{{"038.9", "A41.9"}, {"995.91", "A41.9"}}},
    {{{"584.9", "N17.9"}, {"586", "N19"}}},
    {{{"486", "J18.9"}, {"482.9", "J15.9"}}},
    {{{"434.91", "I63.50"}, {"431", "I61.9"}}},
    {{{"410.71", "I21.4"}, {"410.91", "I21.3"}}},
    {{{"578.9", "K92.2"}, {"578.0", "K92.0"}}},
    {{{"785.52", "R65.21"}, {"785.51", "R57.0"}}},
    {{{"512.8", "J93.9"}, {"518.0", "J98.11"}}},
    {{{"518.89", "J98.4"}, {"519.9", ""}}},
    {{{"998.59", "T81.4XXA"}, {"998.11", ""}}},
    {{{"478.9", ""}, {"478.6", ""}}},
    {{{"403.90", "I12.9"}, {"404.90", ""}}},
    {{{"401.9", "I10"}, {"401.1", ""}}},
    {{{"585.9", "N18.9"}, {"585.3", "N18.3"}}},
    {{{"496", "J44.9"}, {"491.21", "J44.1"}}},
    {{{"272.4", "E78.5"}, {"272.0", "E78.0"}}},
    {{{"414.01", "I25.10"}, {"414.00", ""}}},
    {{{"250.00", "E11.9"}, {"250.01", ""}}},
    {{{"427.31", "I48.91"}, {"427.1", "I47.2"}}},
    {{{"428.0", "I50.9"}, {"428.9", ""}}},
    {{{"250.40", "E11.29"}, {"250.12", ""}}},
    {{{"571.5", "K74.60"}, {"572.3", "K76.6"}}},
    {{{"426.0", "I44.2"}, {"426.4", ""}}},
}};

struct VitalSpec {
  Var var;
  const char* item;
  double sd;
  int decimals;
  double lo;
  double hi;
};

constexpr std::array<VitalSpec, 7> kVitals{{
    {Var::HeartRate, "Heart Rate", 12.0, 0, 20.0, 250.0},
    {Var::MeanArterialPressure, "Non-Invasive BP Mean", 10.0, 0, 20.0, 200.0},
    {Var::DiastolicBp, "Non-Invasive BP Diastolic", 8.0, 0, 10.0, 160.0},
    {Var::SystolicBp, "Non-Invasive BP Systolic", 15.0, 0, 40.0, 260.0},
    {Var::O2, "O2 Saturation", 2.0, 0, 50.0, 100.0},
    {Var::RespiratoryRate, "Respiratory Rate", 4.0, 0, 2.0, 70.0},
    {Var::Temperature, "Temperature (C)", 0.5, 1, 30.0, 43.0},
}};

constexpr std::array<VitalSpec, 3> kLabs{{
    {Var::Glucose, "glucose", 30.0, 0, 20.0, 800.0},
    {Var::PH, "pH", 0.05, 2, 6.6, 7.8},
    {Var::FiO2, "FiO2", 10.0, 0, 21.0, 100.0},
}};

struct Weighted {
  const char* value;
  double weight;
};

constexpr std::array<Weighted, 6> kEthnicities{{
    {"Caucasian", 0.772}, {"African American", 0.108}, {"Hispanic", 0.040},
    {"Asian", 0.016}, {"Native American", 0.006}, {"Other/Unknown", 0.058},
}};

constexpr std::array<const char*, 12> kAdmissionDx{
    "Sepsis, pulmonary",
    "CHF, congestive heart failure",
    "CVA, cerebrovascular accident/stroke",
    "Infarction, acute myocardial (MI)",
    "Rhythm disturbance (atrial, supraventricular)",
    "Pneumonia, bacterial",
    "Diabetic ketoacidosis",
    "Bleeding, upper GI",
    "CABG alone, coronary artery bypass grafting",
    "Emphysema/bronchitis",
    "Sepsis, renal/UTI (including bladder)",
    "Overdose, sedatives, hypnotics, antipsychotics, benzodiazepines",
};

std::string fmt(double v, int decimals) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

/// Rows for one stay, buffered so tables are written in stay order.
struct StayRows {
  std::vector<std::vector<std::string>> lab;
  std::vector<std::vector<std::string>> nc;
  std::vector<std::vector<std::string>> dx;
  std::vector<std::string> patient;
  std::int64_t mapped = 0;
  std::int64_t unmapped = 0;
};

class StayGenerator {
 public:
  StayGenerator(const SynthConfig& cfg, std::int64_t stay_index, StayId stay_id, const std::string& pid)
      : cfg_(cfg), rng_(Rng::substream(cfg.seed, static_cast<std::uint64_t>(stay_index))), stay_id_(stay_id),
        pid_(pid) {}

  StayRows run(SynthSummary& summary);

 private:
  double missing(Var v) const { return cfg_.missingness[index_of(v)]; }
  double signal(int hour) const;
  std::string maybe_garbage(std::string value) {
    if (rng_.bernoulli(cfg_.unparseable_fraction)) return "err";
    return value;
  }
  void chart(StayRows& rows, int offset, const char* item, const std::string& value, bool mapped = true);
  void lab(StayRows& rows, int offset, const char* item, const std::string& value, bool mapped = true);
  void gcs(StayRows& rows, int hour, int offset);

  const SynthConfig& cfg_;
  Rng rng_;
  StayId stay_id_;
  std::string pid_;
  int hours_ = 0;
  bool expired_ = false;
  std::array<double, kNumNumerical> baseline_{};
  double gcs_baseline_ = 0.0;
};

double StayGenerator::signal(int hour) const {
  if (!expired_) return 0.0;
  const double early = std::min(hour + 1, 12) / 12.0;
  const double late = std::clamp((hour + 1 - (hours_ - 24)) / 24.0, 0.0, 1.0);
  return cfg_.signal_strength * (early + late);
}

void StayGenerator::chart(StayRows& rows, int offset, const char* item, const std::string& value, bool mapped) {
  const auto id = std::to_string(stay_id_ * 10000 + static_cast<std::int64_t>(rows.nc.size()));
  rows.nc.push_back({id, std::to_string(stay_id_), std::to_string(offset), std::to_string(offset), "Vital Signs",
                     item, item, value});
  (mapped ? rows.mapped : rows.unmapped) += 1;
}

void StayGenerator::lab(StayRows& rows, int offset, const char* item, const std::string& value, bool mapped) {
  const auto id = std::to_string(stay_id_ * 10000 + static_cast<std::int64_t>(rows.lab.size()));
  rows.lab.push_back({id, std::to_string(stay_id_), std::to_string(offset), item, value, value});
  (mapped ? rows.mapped : rows.unmapped) += 1;
}

void StayGenerator::gcs(StayRows& rows, int hour, int offset) {
  const double impairment = gcs_baseline_ + 0.5 * rng_.normal() + signal(hour);
  const double deficit = std::max(0.0, impairment);
  const int eyes = std::clamp(4 - static_cast<int>(std::lround(deficit * 1.0)), 1, 4);
  const int motor = std::clamp(6 - static_cast<int>(std::lround(deficit * 1.5)), 1, 6);
  const int verbal = std::clamp(5 - static_cast<int>(std::lround(deficit * 1.2)), 1, 5);
  if (!rng_.bernoulli(missing(Var::GcsEyes))) chart(rows, offset, "Eyes", std::to_string(eyes));
  if (!rng_.bernoulli(missing(Var::GcsMotor))) chart(rows, offset, "Motor", std::to_string(motor));
  if (!rng_.bernoulli(missing(Var::GcsVerbal))) chart(rows, offset, "Verbal", std::to_string(verbal));
  if (!rng_.bernoulli(missing(Var::GcsTotal))) chart(rows, offset, "GCS Total", std::to_string(eyes + motor + verbal));
}

StayRows StayGenerator::run(SynthSummary& summary) {
  StayRows rows;
  const auto schema = canonical_schema();

  hours_ = static_cast<int>(rng_.integer(cfg_.hours_min, cfg_.hours_max));
  const int discharge_offset = (hours_ - 1) * 60 + static_cast<int>(rng_.integer(1, 60));
  const bool underage = rng_.bernoulli(cfg_.underage_fraction);
  const double age = underage ? static_cast<double>(rng_.integer(16, 18))
                              : std::round(rng_.truncated_normal(63.0, 17.0, 19.0, 95.0));
  expired_ = rng_.bernoulli(cfg_.mortality_rate);
  const bool died_in_unit =
      expired_ && cfg_.mortality_rate > 0.0 && rng_.bernoulli(cfg_.decomp_rate / cfg_.mortality_rate);
  const bool status_missing = !died_in_unit && rng_.bernoulli(cfg_.missing_status_fraction);
  const bool sparse = rng_.bernoulli(cfg_.sparse_fraction);

  for (int v = 0; v < kNumNumerical; ++v) baseline_[v] = 0.0;
  for (const auto& vs : kVitals) baseline_[index_of(vs.var)] = rng_.normal(0.0, vs.sd);
  for (const auto& ls : kLabs) baseline_[index_of(ls.var)] = rng_.normal(0.0, ls.sd);
  gcs_baseline_ = rng_.normal(-0.5, 1.0);

  // patient row
  const auto gender_draw = rng_.bernoulli(0.455) ? "Female" : "Male";
  std::vector<double> eth_weights;
  for (const auto& e : kEthnicities) eth_weights.push_back(e.weight);
  const auto ethnicity = kEthnicities[rng_.categorical(eth_weights)].value;
  const auto dx = kAdmissionDx[rng_.below(kAdmissionDx.size())];
  const double height = std::round(rng_.truncated_normal(170.0, 10.0, 130.0, 210.0) * 10.0) / 10.0;
  const double weight = std::round(rng_.truncated_normal(81.0, 18.0, 35.0, 200.0) * 10.0) / 10.0;
  auto blank_or = [&](Var v, std::string value) { return rng_.bernoulli(missing(v)) ? std::string() : value; };
  rows.patient = {
      std::to_string(stay_id_),
      pid_,
      blank_or(Var::Gender, gender_draw),
      age > 89 ? "> 89" : fmt(age, 0),
      blank_or(Var::Ethnicity, ethnicity),
      blank_or(Var::AdmissionDiagnosis, dx),
      blank_or(Var::Height, fmt(height, 1)),
      blank_or(Var::Weight, fmt(weight, 1)),
      status_missing ? "" : (expired_ ? "Expired" : "Alive"),
      std::to_string(discharge_offset),
      died_in_unit ? "Expired" : "Alive",
  };

  summary.stays += 1;
  summary.expired += (expired_ && !status_missing) || died_in_unit ? 1 : 0;
  summary.died_in_unit += died_in_unit ? 1 : 0;
  summary.missing_status += status_missing ? 1 : 0;

  if (sparse) {
    const int k = static_cast<int>(rng_.integer(3, 14));
    for (int i = 0; i < k; ++i) {
      const int hour = i % hours_;
      const int offset = hour * 60 + static_cast<int>(rng_.integer(0, 59));
      const double hr = rng_.truncated_normal(schema[0].normal_value + baseline_[0], 12.0, 20.0, 250.0);
      chart(rows, offset, "Heart Rate", fmt(hr, 0));
    }
  } else {
    if (rng_.bernoulli(0.1)) {
      const int offset = -static_cast<int>(rng_.integer(30, 600));
      lab(rows, offset, "glucose", fmt(rng_.truncated_normal(128.0, 30.0, 20.0, 800.0), 0));
    }
    const int lab_phase = static_cast<int>(rng_.below(4));
    const int gcs_phase = static_cast<int>(rng_.below(4));
    for (int hour = 0; hour < hours_; ++hour) {
      const double s = signal(hour);
      for (const auto& vs : kVitals) {
        const int draws = rng_.bernoulli(0.2) ? 2 : 1;
        for (int d = 0; d < draws; ++d) {
          if (rng_.bernoulli(missing(vs.var))) continue;
          double shift = 0.0;
          if (vs.var == Var::HeartRate || vs.var == Var::RespiratoryRate) shift = s * vs.sd;
          const double center = schema[index_of(vs.var)].normal_value + baseline_[index_of(vs.var)] + shift;
          const double lo = std::max(vs.lo, center - 3.0 * vs.sd);
          const double hi = std::min(vs.hi, center + 3.0 * vs.sd);
          const double value = rng_.truncated_normal(center, vs.sd, lo, hi);
          const int offset = hour * 60 + static_cast<int>(rng_.integer(0, 59));
          chart(rows, offset, vs.item, maybe_garbage(fmt(value, vs.decimals)));
        }
      }
      if (hour % 4 == lab_phase) {
        for (const auto& ls : kLabs) {
          if (rng_.bernoulli(missing(ls.var))) continue;
          const double center = schema[index_of(ls.var)].normal_value + baseline_[index_of(ls.var)];
          const double value =
              rng_.truncated_normal(center, ls.sd, std::max(ls.lo, center - 3 * ls.sd), std::min(ls.hi, center + 3 * ls.sd));
          lab(rows, hour * 60 + static_cast<int>(rng_.integer(0, 59)), ls.item, maybe_garbage(fmt(value, ls.decimals)));
        }
        lab(rows, hour * 60 + static_cast<int>(rng_.integer(0, 59)), "potassium",
            fmt(rng_.truncated_normal(4.0, 0.5, 2.0, 7.0), 1), false);
      }
      if (hour % 4 == gcs_phase) gcs(rows, hour, hour * 60 + static_cast<int>(rng_.integer(0, 59)));
    }
  }

  // diagnoses
  int dx_row = 0;
  auto add_dx = [&](const std::string& cell) {
    rows.dx.push_back({std::to_string(stay_id_ * 100 + dx_row++), std::to_string(stay_id_),
                       std::to_string(rng_.integer(0, 600)), "synthetic", cell});
  };
  for (int c = 0; c < kNumPhenotypes; ++c) {
    if (!rng_.bernoulli(cfg_.phenotype_prevalence[c])) continue;
    const auto& pair = kCodes[c][rng_.below(2)];
    std::string cell = pair.icd9;
    if (pair.icd10[0] != '\0' && rng_.bernoulli(0.5)) cell += std::string(", ") + pair.icd10;
    add_dx(cell);
  }
  if (rng_.bernoulli(0.3)) add_dx("V45.81");

  std::int64_t excluded_age = underage ? 1 : 0;
  summary.excluded_age += excluded_age;
  if (!underage && rows.mapped < 15) summary.excluded_records += 1;
  return rows;
}

}  // namespace

SynthConfig::SynthConfig() {
  missingness.fill(0.3);
  // Static demographics are rarely absent in eICU.
  for (Var v : {Var::Age, Var::Gender, Var::Ethnicity, Var::AdmissionDiagnosis}) missingness[index_of(v)] = 0.02;
  for (Var v : {Var::Height, Var::Weight}) missingness[index_of(v)] = 0.1;
  phenotype_prevalence = kDefaultPrevalence;
}

void SynthConfig::validate() const {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string("synth: ") + what + " must be in [0,1]");
  };
  if (n_patients < 0) throw ConfigError("synth: n_patients must be >= 0");
  if (hours_min < 1 || hours_max < hours_min) throw ConfigError("synth: hours range must satisfy 1 <= min <= max");
  for (double p : missingness) prob(p, "missingness");
  for (double p : phenotype_prevalence) prob(p, "phenotype prevalence");
  prob(mortality_rate, "mortality_rate");
  prob(decomp_rate, "decomp_rate");
  prob(multi_stay_fraction, "multi_stay_fraction");
  prob(underage_fraction, "underage_fraction");
  prob(sparse_fraction, "sparse_fraction");
  prob(missing_status_fraction, "missing_status_fraction");
  prob(unparseable_fraction, "unparseable_fraction");
  if (decomp_rate > mortality_rate) throw ConfigError("synth: decomp_rate cannot exceed mortality_rate");
  if (!(signal_strength >= 0.0) || !std::isfinite(signal_strength)) {
    throw ConfigError("synth: signal_strength must be finite and >= 0");
  }
}

std::string SynthSummary::to_text() const {
  std::ostringstream out;
  out << "patients=" << patients << '\n'
      << "stays=" << stays << '\n'
      << "expired=" << expired << '\n'
      << "died_in_unit=" << died_in_unit << '\n'
      << "missing_status=" << missing_status << '\n'
      << "excluded_age=" << excluded_age << '\n'
      << "excluded_records=" << excluded_records << '\n'
      << "lab_rows=" << lab_rows << '\n'
      << "nursecharting_rows=" << nursecharting_rows << '\n'
      << "mapped_records=" << mapped_records << '\n'
      << "unmapped_rows=" << unmapped_rows << '\n'
      << "diagnosis_rows=" << diagnosis_rows << '\n';
  return out.str();
}

PhenotypeCatalog synthetic_catalog() {
  PhenotypeCatalog catalog;
  catalog.categories = phenotype_categories();
  for (int c = 0; c < kNumPhenotypes; ++c) {
    for (const auto& pair : kCodes[c]) catalog.code_map.emplace(pair.icd9, c);
  }
  return catalog;
}

SynthSummary generate(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);

  CsvWriter patient(out_dir / "patient.csv");
  CsvWriter lab(out_dir / "lab.csv");
  CsvWriter nc(out_dir / "nurseCharting.csv");
  CsvWriter dx(out_dir / "diagnosis.csv");
  patient.write("patientunitstayid", "uniquepid", "gender", "age", "ethnicity", "apacheadmissiondx",
                "admissionheight", "admissionweight", "hospitaldischargestatus", "unitdischargeoffset",
                "unitdischargestatus");
  lab.write("labid", "patientunitstayid", "labresultoffset", "labname", "labresult", "labresulttext");
  nc.write("nursingchartid", "patientunitstayid", "nursingchartoffset", "nursingchartentryoffset",
           "nursingchartcelltypecat", "nursingchartcelltypevallabel", "nursingchartcelltypevalname",
           "nursingchartvalue");
  dx.write("diagnosisid", "patientunitstayid", "diagnosisoffset", "diagnosisstring", "icd9code");

  SynthSummary summary;
  summary.patients = cfg.n_patients;
  std::int64_t stay_index = 0;
  for (std::int64_t p = 0; p < cfg.n_patients; ++p) {
    Rng patient_rng = Rng::substream(cfg.seed ^ 0x5bd1e995ULL, static_cast<std::uint64_t>(p));
    const int n_stays = patient_rng.bernoulli(cfg.multi_stay_fraction) ? 2 : 1;
    char pid[32];
    std::snprintf(pid, sizeof(pid), "SYN-%06lld", static_cast<long long>(p));
    for (int s = 0; s < n_stays; ++s) {
      const StayId stay_id = 100000 + stay_index;
      StayGenerator gen(cfg, stay_index, stay_id, pid);
      const auto rows = gen.run(summary);
      patient.row(rows.patient);
      for (const auto& r : rows.lab) lab.row(r);
      for (const auto& r : rows.nc) nc.row(r);
      for (const auto& r : rows.dx) dx.row(r);
      summary.lab_rows += static_cast<std::int64_t>(rows.lab.size());
      summary.nursecharting_rows += static_cast<std::int64_t>(rows.nc.size());
      summary.mapped_records += rows.mapped;
      summary.unmapped_rows += rows.unmapped;
      summary.diagnosis_rows += static_cast<std::int64_t>(rows.dx.size());
      ++stay_index;
    }
  }

  write_phenotype_catalog(synthetic_catalog(), out_dir / "phenotype_catalog.csv");
  std::ofstream(out_dir / "synth_summary.txt", std::ios::binary) << summary.to_text();
  return summary;
}

}  // namespace icubench
