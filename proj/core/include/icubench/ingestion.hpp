#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "icubench/data_model.hpp"

namespace icubench {

enum class TableKind { patient, lab, nursecharting, diagnosis };

std::string_view table_name(TableKind t);

/// Field roles a source column can map to besides the schema variables.
namespace role {
inline constexpr std::string_view stay_id = "stay_id";
inline constexpr std::string_view patient_id = "patient_id";
inline constexpr std::string_view offset = "offset";
inline constexpr std::string_view item = "item";
inline constexpr std::string_view value = "value";
inline constexpr std::string_view icd9_codes = "icd9_codes";
inline constexpr std::string_view hospital_discharge_status = "hospital_discharge_status";
inline constexpr std::string_view unit_discharge_offset = "unit_discharge_offset";
inline constexpr std::string_view unit_discharge_status = "unit_discharge_status";
}  // namespace role

/// One eICU-shaped CSV file and how its columns map onto our fields.
///
/// `column_map` maps a source column to a field role (see `role`) or, for
/// the wide patient table, to a schema variable name. Long tables (lab,
/// nurseCharting) name the measured quantity in their `item` column;
/// `item_map` maps those item labels to schema variable names.
struct TableSource {
  std::filesystem::path path;
  TableKind table = TableKind::patient;
  std::map<std::string, std::string> column_map;
  std::map<std::string, std::string> item_map;

  /// Throws ConfigError if a mapping targets neither a role valid for the
  /// table nor a schema variable.
  void validate() const;
};

/// Column layout of the eICU-CRD v1.0 distribution.
///
/// Variable sources:
///   patient:       Age, Gender, Ethnicity, Admission diagnosis
///                  (apacheadmissiondx), Height, Weight
///   lab:           Glucose ("glucose", "bedside glucose"), pH, FiO2,
///                  O2 ("O2 Sat (%)")
///   nurseCharting: vitals (invasive and non-invasive blood pressure both
///                  feed the same variable), Temperature ("Temperature (C)"),
///                  O2 ("O2 Saturation") and the four GCS components.
TableSource eicu_source(TableKind table, const std::filesystem::path& path);

struct TableStats {
  std::uint64_t rows_read = 0;
  std::uint64_t rows_emitted = 0;
  std::uint64_t filtered_unmapped = 0;
  std::uint64_t skipped_malformed = 0;
  /// First few row-level errors, "line N: reason".
  std::vector<std::string> errors;
};

struct IngestionReport {
  std::map<std::string, TableStats> tables;

  TableStats& stats(TableKind t) { return tables[std::string(table_name(t))]; }
  std::string to_text() const;
};

/// One StayMeta per patient row. Ages of "> 89" parse to 90; rows with an
/// unparseable stay id, age or unit discharge offset are skipped and noted
/// in the report. Throws SchemaError when a mapped column is missing.
std::vector<StayMeta> load_stay_meta(const TableSource& src, IngestionReport& report);

/// Streams schema-mapped records in file order to `sink`; unmapped items
/// are filtered and counted. Values are passed through verbatim.
void load_records(const TableSource& src, const std::function<void(StayRecordRaw&&)>& sink,
                  IngestionReport& report);

/// stay id -> normalised codes. Multi-code cells ("038.9, A41.9") are split.
std::map<StayId, std::set<std::string>> load_diagnoses(const TableSource& src, IngestionReport& report);

/// Parses an eICU age cell; "> 89" maps to 90.
std::optional<double> parse_age(std::string_view cell);

}  // namespace icubench
