#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace icubench {

using StayId = std::int64_t;
/// eICU `uniquepid`, e.g. "002-34851". All stays of one patient share it.
using PatientId = std::string;

inline constexpr int kNumNumerical = 13;
inline constexpr int kNumCategorical = 7;
inline constexpr int kNumVariables = kNumNumerical + kNumCategorical;
inline constexpr int kNumPhenotypes = 25;
inline constexpr std::string_view kUnknownCategory = "unknown";

/// Canonical variable order. Numerical channels come first; the value of a
/// categorical enumerator minus kNumNumerical is its categorical column.
enum class Var : std::uint8_t {
  HeartRate = 0,
  MeanArterialPressure,
  DiastolicBp,
  SystolicBp,
  O2,
  RespiratoryRate,
  Temperature,
  Glucose,
  FiO2,
  PH,
  Height,
  Weight,
  Age,
  AdmissionDiagnosis,
  Ethnicity,
  Gender,
  GcsTotal,
  GcsEyes,
  GcsMotor,
  GcsVerbal,
};

constexpr int index_of(Var v) { return static_cast<int>(v); }
constexpr bool is_numerical(Var v) { return index_of(v) < kNumNumerical; }
constexpr int categorical_column(Var v) { return index_of(v) - kNumNumerical; }

enum class VariableKind { numerical, categorical };

struct VariableSpec {
  std::string name;
  VariableKind kind = VariableKind::numerical;
  /// Native clinical units; only meaningful for numerical variables.
  double normal_value = 0.0;
  /// Index 0 is always "unknown". Only meaningful for categorical variables.
  std::vector<std::string> vocab;
};

using Schema = std::vector<VariableSpec>;

/// The twenty input variables, 13 numerical then 7 categorical, each
/// categorical vocab holding only the reserved "unknown" entry.
Schema canonical_schema();

/// Index into the canonical schema by variable name, or nullopt.
std::optional<Var> variable_by_name(std::string_view name);

std::string_view variable_name(Var v);

/// Sum of the categorical vocab sizes. Throws ConfigError if any
/// categorical variable has an empty vocab.
std::size_t total_ohe_width(const Schema& schema);

/// Human-readable `key = value` serialisation of a schema. Keys are the
/// variable names, e.g. `Heart rate.normal = 86`.
void write_schema_config(const Schema& schema, const std::filesystem::path& path);
std::string schema_config_text(const Schema& schema);

/// Applies a schema config file on top of `base`. Unknown variable names
/// or malformed values raise ConfigError.
Schema read_schema_config(const std::filesystem::path& path, Schema base = canonical_schema());
Schema parse_schema_config(std::string_view text, Schema base = canonical_schema());

struct StayRecordRaw {
  StayId stay_id = 0;
  Var variable = Var::HeartRate;
  /// Minutes since unit admission; may be negative.
  std::int32_t offset_minutes = 0;
  std::string value;

  friend bool operator==(const StayRecordRaw&, const StayRecordRaw&) = default;
};

enum class DischargeStatus { alive, expired, missing };

struct StayMeta {
  StayId stay_id = 0;
  PatientId patient_id;
  double age = 0.0;
  std::string gender;
  std::string ethnicity;
  std::string admission_diagnosis;
  std::optional<double> height_cm;
  std::optional<double> weight_kg;
  DischargeStatus hospital_discharge_status = DischargeStatus::missing;
  std::int32_t unit_discharge_offset_minutes = 0;
  /// Set when the patient died in the unit; implies status expired.
  std::optional<std::int32_t> death_offset_minutes;
  std::set<std::string> icd9_codes;

  friend bool operator==(const StayMeta&, const StayMeta&) = default;
};

/// Dataset-wide interning of categorical strings. Code 0 of every variable
/// is "unknown"; observed strings get codes in order of first appearance.
class CategoryDictionary {
 public:
  CategoryDictionary();

  int intern(int categorical_column, std::string_view value);
  std::optional<int> find(int categorical_column, std::string_view value) const;
  const std::string& value(int categorical_column, int code) const;
  int size(int categorical_column) const;

 private:
  std::array<std::vector<std::string>, kNumCategorical> values_;
  std::array<std::unordered_map<std::string, int>, kNumCategorical> codes_;
};

using NumericMatrix = Eigen::Matrix<double, Eigen::Dynamic, kNumNumerical, Eigen::RowMajor>;
using CategoricalMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, kNumCategorical, Eigen::RowMajor>;
using NumericMask = Eigen::Matrix<bool, Eigen::Dynamic, kNumNumerical, Eigen::RowMajor>;
using CategoricalMask = Eigen::Matrix<bool, Eigen::Dynamic, kNumCategorical, Eigen::RowMajor>;

/// Categorical code of a cell that holds nothing yet (before imputation).
inline constexpr std::int32_t kMissingCode = -1;

/// One row per hour since unit admission. Categorical cells hold
/// CategoryDictionary codes.
struct HourlyGrid {
  StayId stay_id = 0;
  int n_hours = 0;
  NumericMatrix numeric;
  CategoricalMatrix categorical;
  NumericMask observed_mask;
  CategoricalMask categorical_observed;

  /// Every cell unobserved: numeric NaN, categorical kMissingCode.
  static HourlyGrid empty(StayId stay_id, int n_hours);
};

/// ceil(unit_discharge_offset / 60) clipped to [0, max_hours].
int grid_hours(std::int32_t unit_discharge_offset_minutes, int max_hours);

enum class Task { mortality, los, phenotyping, decompensation };

std::string_view task_name(Task t);

/// Half-open range of grid rows [start, end).
struct HourRange {
  int start = 0;
  int end = 0;
  int length() const { return end - start; }
  friend bool operator==(const HourRange&, const HourRange&) = default;
};

struct BinaryLabel {
  int value = 0;
  friend bool operator==(const BinaryLabel&, const BinaryLabel&) = default;
};
struct PhenotypeMask {
  std::bitset<kNumPhenotypes> bits;
  friend bool operator==(const PhenotypeMask&, const PhenotypeMask&) = default;
};
struct RemainingLos {
  double days = 0.0;
  friend bool operator==(const RemainingLos&, const RemainingLos&) = default;
};

using Label = std::variant<BinaryLabel, PhenotypeMask, RemainingLos>;

struct TaskInstance {
  StayId stay_id = 0;
  HourRange window;
  Label label;
  Task task = Task::mortality;

  friend bool operator==(const TaskInstance&, const TaskInstance&) = default;
};

enum class PhenotypeType { acute, chronic, mixed };

struct PhenotypeCategory {
  std::string name;
  PhenotypeType type = PhenotypeType::acute;
};

struct PhenotypeCatalog {
  std::vector<PhenotypeCategory> categories;
  std::map<std::string, int> code_map;

  std::optional<int> category_of(const std::string& code) const;
};

/// The 25 phenotype categories in their canonical order (13 acute,
/// 7 chronic, 5 mixed) with an empty code map.
std::vector<PhenotypeCategory> phenotype_categories();
std::string_view phenotype_type_name(PhenotypeType t);

/// Reads `code,category_index` lines. A code listed under two different
/// categories raises ConfigError; a header line starting with "code" is
/// skipped.
PhenotypeCatalog load_phenotype_catalog(const std::filesystem::path& path);
PhenotypeCatalog parse_phenotype_catalog(std::string_view text);
void write_phenotype_catalog(const PhenotypeCatalog& catalog, const std::filesystem::path& path);

/// Normalises an ICD-9 code cell entry: trimmed and upper-cased.
std::string normalize_code(std::string_view code);

}  // namespace icubench
