#include "icubench/ingestion.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>

#include "icubench/csv.hpp"
#include "icubench/errors.hpp"
#include "text_util.hpp"

namespace icubench {

namespace {

constexpr std::size_t kMaxReportedErrors = 20;

void note_error(TableStats& stats, std::size_t line, const std::string& reason) {
  ++stats.skipped_malformed;
  if (stats.errors.size() < kMaxReportedErrors) {
    stats.errors.push_back("line " + std::to_string(line) + ": " + reason);
  }
}

std::vector<std::string_view> allowed_roles(TableKind t) {
  switch (t) {
    case TableKind::patient:
      return {role::stay_id, role::patient_id, role::hospital_discharge_status, role::unit_discharge_offset,
              role::unit_discharge_status};
    case TableKind::lab:
    case TableKind::nursecharting:
      return {role::stay_id, role::offset, role::item, role::value};
    case TableKind::diagnosis:
      return {role::stay_id, role::icd9_codes};
  }
  return {};
}

/// Resolves the source column for each role/variable target.
class ColumnIndex {
 public:
  ColumnIndex(const TableSource& src, const CsvReader& reader) {
    for (const auto& [column, target] : src.column_map) {
      const auto pos = reader.column(column);
      if (!pos) throw SchemaError(src.path.string() + ": missing required column '" + column + "'");
      positions_[target] = *pos;
    }
  }

  std::optional<std::size_t> find(std::string_view target) const {
    if (auto it = positions_.find(std::string(target)); it != positions_.end()) return it->second;
    return std::nullopt;
  }

  std::size_t require(const TableSource& src, std::string_view target) const {
    if (auto pos = find(target)) return *pos;
    throw ConfigError(std::string(table_name(src.table)) + " source does not map a column to '" +
                      std::string(target) + "'");
  }

 private:
  std::unordered_map<std::string, std::size_t> positions_;
};

const std::string& field_at(const std::vector<std::string>& fields, std::size_t pos) {
  static const std::string empty;
  return pos < fields.size() ? fields[pos] : empty;
}

std::string cell(const std::vector<std::string>& fields, std::optional<std::size_t> pos) {
  if (!pos) return {};
  return std::string(detail::trim(field_at(fields, *pos)));
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
  }
  return true;
}

}  // namespace

std::string_view table_name(TableKind t) {
  switch (t) {
    case TableKind::patient: return "patient";
    case TableKind::lab: return "lab";
    case TableKind::nursecharting: return "nurseCharting";
    case TableKind::diagnosis: return "diagnosis";
  }
  return "?";
}

void TableSource::validate() const {
  const auto roles = allowed_roles(table);
  for (const auto& [column, target] : column_map) {
    bool ok = std::find(roles.begin(), roles.end(), target) != roles.end();
    if (!ok && table == TableKind::patient) ok = variable_by_name(target).has_value();
    if (!ok) {
      throw ConfigError(std::string(table_name(table)) + " column '" + column + "' maps to unknown target '" +
                        target + "'");
    }
  }
  for (const auto& [item, target] : item_map) {
    if (!variable_by_name(target)) {
      throw ConfigError(std::string(table_name(table)) + " item '" + item + "' maps to unknown variable '" +
                        target + "'");
    }
  }
}

TableSource eicu_source(TableKind table, const std::filesystem::path& path) {
  TableSource src;
  src.path = path;
  src.table = table;
  switch (table) {
    case TableKind::patient:
      src.column_map = {
          {"patientunitstayid", std::string(role::stay_id)},
          {"uniquepid", std::string(role::patient_id)},
          {"gender", "Gender"},
          {"age", "Age"},
          {"ethnicity", "Ethnicity"},
          {"apacheadmissiondx", "Admission diagnosis"},
          {"admissionheight", "Height"},
          {"admissionweight", "Weight"},
          {"hospitaldischargestatus", std::string(role::hospital_discharge_status)},
          {"unitdischargeoffset", std::string(role::unit_discharge_offset)},
          {"unitdischargestatus", std::string(role::unit_discharge_status)},
      };
      break;
    case TableKind::lab:
      src.column_map = {
          {"patientunitstayid", std::string(role::stay_id)},
          {"labresultoffset", std::string(role::offset)},
          {"labname", std::string(role::item)},
          {"labresult", std::string(role::value)},
      };
      src.item_map = {
          {"glucose", "Glucose"},
          {"bedside glucose", "Glucose"},
          {"pH", "pH"},
          {"FiO2", "FiO2"},
          {"O2 Sat (%)", "O2"},
      };
      break;
    case TableKind::nursecharting:
      src.column_map = {
          {"patientunitstayid", std::string(role::stay_id)},
          {"nursingchartoffset", std::string(role::offset)},
          {"nursingchartcelltypevalname", std::string(role::item)},
          {"nursingchartvalue", std::string(role::value)},
      };
      src.item_map = {
          {"Heart Rate", "Heart rate"},
          {"Non-Invasive BP Mean", "Mean arterial pressure"},
          {"Invasive BP Mean", "Mean arterial pressure"},
          {"Non-Invasive BP Diastolic", "Diastolic blood pressure"},
          {"Invasive BP Diastolic", "Diastolic blood pressure"},
          {"Non-Invasive BP Systolic", "Systolic blood pressure"},
          {"Invasive BP Systolic", "Systolic blood pressure"},
          {"O2 Saturation", "O2"},
          {"Respiratory Rate", "Respiratory rate"},
          {"Temperature (C)", "Temperature"},
          {"GCS Total", "Glasgow Coma Score Total"},
          {"Eyes", "Glasgow Coma Score Eyes"},
          {"Motor", "Glasgow Coma Score Motor"},
          {"Verbal", "Glasgow Coma Score Verbal"},
      };
      break;
    case TableKind::diagnosis:
      src.column_map = {
          {"patientunitstayid", std::string(role::stay_id)},
          {"icd9code", std::string(role::icd9_codes)},
      };
      break;
  }
  return src;
}

std::string IngestionReport::to_text() const {
  std::ostringstream out;
  out << "ingestion report\n";
  for (const auto& [name, s] : tables) {
    out << "  " << name << ": rows_read=" << s.rows_read << " rows_emitted=" << s.rows_emitted
        << " filtered_unmapped=" << s.filtered_unmapped << " skipped_malformed=" << s.skipped_malformed << '\n';
    for (const auto& e : s.errors) out << "    " << e << '\n';
  }
  return out.str();
}

std::optional<double> parse_age(std::string_view text) {
  text = detail::trim(text);
  if (text == "> 89" || text == ">89") return 90.0;
  return detail::parse_double(text);
}

std::vector<StayMeta> load_stay_meta(const TableSource& src, IngestionReport& report) {
  if (src.table != TableKind::patient) throw ConfigError("load_stay_meta expects a patient table");
  src.validate();
  CsvReader reader(src.path);
  const ColumnIndex cols(src, reader);
  const auto stay_col = cols.require(src, role::stay_id);
  const auto age_col = cols.require(src, "Age");
  const auto los_col = cols.require(src, role::unit_discharge_offset);
  const auto patient_col = cols.find(role::patient_id);
  const auto status_col = cols.find(role::hospital_discharge_status);
  const auto unit_status_col = cols.find(role::unit_discharge_status);
  const auto gender_col = cols.find("Gender");
  const auto ethnicity_col = cols.find("Ethnicity");
  const auto dx_col = cols.find("Admission diagnosis");
  const auto height_col = cols.find("Height");
  const auto weight_col = cols.find("Weight");

  auto& stats = report.stats(TableKind::patient);
  std::vector<StayMeta> metas;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    ++stats.rows_read;
    const auto stay = detail::parse_int(field_at(fields, stay_col));
    if (!stay) {
      note_error(stats, reader.line(), "unparseable stay id");
      continue;
    }
    const auto age = parse_age(field_at(fields, age_col));
    if (!age) {
      note_error(stats, reader.line(), "unparseable age '" + field_at(fields, age_col) + "'");
      continue;
    }
    const auto los = detail::parse_int(field_at(fields, los_col));
    if (!los) {
      note_error(stats, reader.line(), "unparseable unit discharge offset");
      continue;
    }
    StayMeta meta;
    meta.stay_id = *stay;
    meta.patient_id = patient_col ? cell(fields, patient_col) : std::to_string(*stay);
    if (meta.patient_id.empty()) meta.patient_id = std::to_string(*stay);
    meta.age = *age;
    meta.gender = cell(fields, gender_col);
    meta.ethnicity = cell(fields, ethnicity_col);
    meta.admission_diagnosis = cell(fields, dx_col);
    if (height_col) meta.height_cm = detail::parse_double(field_at(fields, *height_col));
    if (weight_col) meta.weight_kg = detail::parse_double(field_at(fields, *weight_col));
    meta.unit_discharge_offset_minutes = static_cast<std::int32_t>(*los);
    const auto status = cell(fields, status_col);
    if (iequals(status, "Expired")) {
      meta.hospital_discharge_status = DischargeStatus::expired;
    } else if (iequals(status, "Alive")) {
      meta.hospital_discharge_status = DischargeStatus::alive;
    }
    if (iequals(cell(fields, unit_status_col), "Expired")) {
      meta.death_offset_minutes = meta.unit_discharge_offset_minutes;
      meta.hospital_discharge_status = DischargeStatus::expired;
    }
    metas.push_back(std::move(meta));
    ++stats.rows_emitted;
  }
  return metas;
}

void load_records(const TableSource& src, const std::function<void(StayRecordRaw&&)>& sink,
                  IngestionReport& report) {
  if (src.table != TableKind::lab && src.table != TableKind::nursecharting) {
    throw ConfigError("load_records expects a lab or nurseCharting table");
  }
  src.validate();
  CsvReader reader(src.path);
  const ColumnIndex cols(src, reader);
  const auto stay_col = cols.require(src, role::stay_id);
  const auto offset_col = cols.require(src, role::offset);
  const auto item_col = cols.require(src, role::item);
  const auto value_col = cols.require(src, role::value);

  std::unordered_map<std::string, Var> items;
  for (const auto& [item, target] : src.item_map) items.emplace(item, *variable_by_name(target));

  auto& stats = report.stats(src.table);
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    ++stats.rows_read;
    const auto item = items.find(std::string(detail::trim(field_at(fields, item_col))));
    if (item == items.end()) {
      ++stats.filtered_unmapped;
      continue;
    }
    const auto stay = detail::parse_int(field_at(fields, stay_col));
    const auto offset = detail::parse_int(field_at(fields, offset_col));
    if (!stay || !offset) {
      note_error(stats, reader.line(), !stay ? "unparseable stay id" : "unparseable offset");
      continue;
    }
    StayRecordRaw rec;
    rec.stay_id = *stay;
    rec.variable = item->second;
    rec.offset_minutes = static_cast<std::int32_t>(*offset);
    rec.value = field_at(fields, value_col);
    ++stats.rows_emitted;
    sink(std::move(rec));
  }
}

std::map<StayId, std::set<std::string>> load_diagnoses(const TableSource& src, IngestionReport& report) {
  if (src.table != TableKind::diagnosis) throw ConfigError("load_diagnoses expects a diagnosis table");
  src.validate();
  CsvReader reader(src.path);
  const ColumnIndex cols(src, reader);
  const auto stay_col = cols.require(src, role::stay_id);
  const auto code_col = cols.require(src, role::icd9_codes);

  auto& stats = report.stats(TableKind::diagnosis);
  std::map<StayId, std::set<std::string>> out;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    ++stats.rows_read;
    const auto stay = detail::parse_int(field_at(fields, stay_col));
    if (!stay) {
      note_error(stats, reader.line(), "unparseable stay id");
      continue;
    }
    bool any = false;
    for (auto part : detail::split(field_at(fields, code_col), ',')) {
      auto code = normalize_code(part);
      if (code.empty()) continue;
      out[*stay].insert(std::move(code));
      any = true;
    }
    if (any) {
      ++stats.rows_emitted;
    } else {
      ++stats.filtered_unmapped;
    }
  }
  return out;
}

}  // namespace icubench
