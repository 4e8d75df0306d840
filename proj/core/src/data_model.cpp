#include "icubench/data_model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "icubench/errors.hpp"
#include "text_util.hpp"

namespace icubench {

namespace {

struct BuiltinVariable {
  std::string_view name;
  VariableKind kind;
  double normal_value;
};

// Normal values in native eICU units. FiO2 is a percentage as charted in
// the lab table; Age/Height/Weight use cohort medians.
constexpr std::array<BuiltinVariable, kNumVariables> kBuiltin{{
    {"Heart rate", VariableKind::numerical, 86.0},
    {"Mean arterial pressure", VariableKind::numerical, 77.0},
    {"Diastolic blood pressure", VariableKind::numerical, 59.0},
    {"Systolic blood pressure", VariableKind::numerical, 118.0},
    {"O2", VariableKind::numerical, 98.0},
    {"Respiratory rate", VariableKind::numerical, 19.0},
    {"Temperature", VariableKind::numerical, 37.0},
    {"Glucose", VariableKind::numerical, 128.0},
    {"FiO2", VariableKind::numerical, 21.0},
    {"pH", VariableKind::numerical, 7.4},
    {"Height", VariableKind::numerical, 170.0},
    {"Weight", VariableKind::numerical, 81.0},
    {"Age", VariableKind::numerical, 62.0},
    {"Admission diagnosis", VariableKind::categorical, 0.0},
    {"Ethnicity", VariableKind::categorical, 0.0},
    {"Gender", VariableKind::categorical, 0.0},
    {"Glasgow Coma Score Total", VariableKind::categorical, 0.0},
    {"Glasgow Coma Score Eyes", VariableKind::categorical, 0.0},
    {"Glasgow Coma Score Motor", VariableKind::categorical, 0.0},
    {"Glasgow Coma Score Verbal", VariableKind::categorical, 0.0},
}};

constexpr std::array<std::pair<std::string_view, PhenotypeType>, kNumPhenotypes> kPhenotypes{{
    {"Respiratory failure; insufficiency; arrest", PhenotypeType::acute},
    {"Fluid and electrolyte disorders", PhenotypeType::acute},
    {"Septicemia", PhenotypeType::acute},
    {"Acute and unspecified renal failure", PhenotypeType::acute},
    {"Pneumonia", PhenotypeType::acute},
    {"Acute cerebrovascular disease", PhenotypeType::acute},
    {"Acute myocardial infarction", PhenotypeType::acute},
    {"Gastrointestinal hemorrhage", PhenotypeType::acute},
    {"Shock", PhenotypeType::acute},
    {"Pleurisy; pneumothorax; pulmonary collapse", PhenotypeType::acute},
    {"Other lower respiratory disease", PhenotypeType::acute},
    {"Complications of surgical", PhenotypeType::acute},
    {"Other upper respiratory disease", PhenotypeType::acute},
    {"Hypertension with complications", PhenotypeType::chronic},
    {"Essential hypertension", PhenotypeType::chronic},
    {"Chronic kidney disease", PhenotypeType::chronic},
    {"Chronic obstructive pulmonary disease", PhenotypeType::chronic},
    {"Disorders of lipid metabolism", PhenotypeType::chronic},
    {"Coronary atherosclerosis and related", PhenotypeType::chronic},
    {"Diabetes mellitus without complication", PhenotypeType::chronic},
    {"Cardiac dysrhythmias", PhenotypeType::mixed},
    {"Congestive heart failure; non hypertensive", PhenotypeType::mixed},
    {"Diabetes mellitus with complications", PhenotypeType::mixed},
    {"Other liver diseases", PhenotypeType::mixed},
    {"Conduction disorders", PhenotypeType::mixed},
}};

std::string join_vocab(const std::vector<std::string>& vocab) {
  std::string out;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (i) out += '|';
    out += vocab[i];
  }
  return out;
}

}  // namespace

Schema canonical_schema() {
  Schema schema;
  schema.reserve(kNumVariables);
  for (const auto& b : kBuiltin) {
    VariableSpec spec;
    spec.name = std::string(b.name);
    spec.kind = b.kind;
    spec.normal_value = b.normal_value;
    if (b.kind == VariableKind::categorical) spec.vocab = {std::string(kUnknownCategory)};
    schema.push_back(std::move(spec));
  }
  return schema;
}

std::optional<Var> variable_by_name(std::string_view name) {
  for (int i = 0; i < kNumVariables; ++i) {
    if (kBuiltin[i].name == name) return static_cast<Var>(i);
  }
  return std::nullopt;
}

std::string_view variable_name(Var v) { return kBuiltin[index_of(v)].name; }

std::size_t total_ohe_width(const Schema& schema) {
  std::size_t width = 0;
  for (const auto& spec : schema) {
    if (spec.kind != VariableKind::categorical) continue;
    if (spec.vocab.empty()) throw ConfigError("categorical variable '" + spec.name + "' has no vocabulary");
    width += spec.vocab.size();
  }
  return width;
}

std::string schema_config_text(const Schema& schema) {
  std::ostringstream out;
  out << "# variable schema: <name>.kind, <name>.normal (numerical), <name>.vocab (categorical, '|'-separated)\n";
  out.precision(17);
  for (const auto& spec : schema) {
    const bool numerical = spec.kind == VariableKind::numerical;
    out << spec.name << ".kind = " << (numerical ? "numerical" : "categorical") << '\n';
    if (numerical) {
      out << spec.name << ".normal = " << spec.normal_value << '\n';
    } else {
      out << spec.name << ".vocab = " << join_vocab(spec.vocab) << '\n';
    }
  }
  return out.str();
}

void write_schema_config(const Schema& schema, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write schema config " + path.string());
  out << schema_config_text(schema);
}

Schema parse_schema_config(std::string_view text, Schema base) {
  int line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("schema config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    const auto dot = key.rfind('.');
    if (dot == std::string_view::npos) {
      throw ConfigError("schema config line " + std::to_string(line_no) + ": key lacks a field suffix");
    }
    const auto var = variable_by_name(key.substr(0, dot));
    if (!var) throw ConfigError("schema config: unknown variable '" + std::string(key.substr(0, dot)) + "'");
    auto& spec = base[index_of(*var)];
    const auto field = key.substr(dot + 1);
    if (field == "kind") {
      const auto expected = spec.kind == VariableKind::numerical ? "numerical" : "categorical";
      if (value != expected) throw ConfigError("schema config: kind of '" + spec.name + "' is fixed to " + expected);
    } else if (field == "normal") {
      if (spec.kind != VariableKind::numerical) throw ConfigError("schema config: '" + spec.name + "' is categorical");
      const auto parsed = detail::parse_double(value);
      if (!parsed || !std::isfinite(*parsed)) {
        throw ConfigError("schema config: normal value of '" + spec.name + "' is not a finite number");
      }
      spec.normal_value = *parsed;
    } else if (field == "vocab") {
      if (spec.kind != VariableKind::categorical) throw ConfigError("schema config: '" + spec.name + "' is numerical");
      std::vector<std::string> vocab;
      for (auto item : detail::split(value, '|')) vocab.emplace_back(detail::trim(item));
      if (vocab.empty() || vocab.front() != kUnknownCategory) {
        throw ConfigError("schema config: vocab of '" + spec.name + "' must start with 'unknown'");
      }
      spec.vocab = std::move(vocab);
    } else {
      throw ConfigError("schema config: unknown field '" + std::string(field) + "'");
    }
  }
  return base;
}

Schema read_schema_config(const std::filesystem::path& path, Schema base) {
  return parse_schema_config(detail::read_file(path), std::move(base));
}

CategoryDictionary::CategoryDictionary() {
  for (int c = 0; c < kNumCategorical; ++c) intern(c, kUnknownCategory);
}

int CategoryDictionary::intern(int column, std::string_view value) {
  auto& codes = codes_.at(column);
  std::string key(value);
  if (auto it = codes.find(key); it != codes.end()) return it->second;
  const int code = static_cast<int>(values_[column].size());
  values_[column].push_back(key);
  codes.emplace(std::move(key), code);
  return code;
}

std::optional<int> CategoryDictionary::find(int column, std::string_view value) const {
  const auto& codes = codes_.at(column);
  if (auto it = codes.find(std::string(value)); it != codes.end()) return it->second;
  return std::nullopt;
}

const std::string& CategoryDictionary::value(int column, int code) const { return values_.at(column).at(code); }

int CategoryDictionary::size(int column) const { return static_cast<int>(values_.at(column).size()); }

HourlyGrid HourlyGrid::empty(StayId stay_id, int n_hours) {
  HourlyGrid g;
  g.stay_id = stay_id;
  g.n_hours = n_hours;
  g.numeric = NumericMatrix::Constant(n_hours, kNumNumerical, std::numeric_limits<double>::quiet_NaN());
  g.categorical = CategoricalMatrix::Constant(n_hours, kNumCategorical, kMissingCode);
  g.observed_mask = NumericMask::Constant(n_hours, kNumNumerical, false);
  g.categorical_observed = CategoricalMask::Constant(n_hours, kNumCategorical, false);
  return g;
}

int grid_hours(std::int32_t unit_discharge_offset_minutes, int max_hours) {
  if (unit_discharge_offset_minutes <= 0) return 0;
  const int hours = (unit_discharge_offset_minutes + 59) / 60;
  return std::min(hours, max_hours);
}

std::string_view task_name(Task t) {
  switch (t) {
    case Task::mortality: return "mortality";
    case Task::los: return "los";
    case Task::phenotyping: return "phenotyping";
    case Task::decompensation: return "decompensation";
  }
  return "?";
}

std::optional<int> PhenotypeCatalog::category_of(const std::string& code) const {
  if (auto it = code_map.find(code); it != code_map.end()) return it->second;
  return std::nullopt;
}

std::vector<PhenotypeCategory> phenotype_categories() {
  std::vector<PhenotypeCategory> out;
  out.reserve(kNumPhenotypes);
  for (const auto& [name, type] : kPhenotypes) out.push_back({std::string(name), type});
  return out;
}

std::string_view phenotype_type_name(PhenotypeType t) {
  switch (t) {
    case PhenotypeType::acute: return "acute";
    case PhenotypeType::chronic: return "chronic";
    case PhenotypeType::mixed: return "mixed";
  }
  return "?";
}

std::string normalize_code(std::string_view code) {
  std::string out(detail::trim(code));
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return std::toupper(ch); });
  return out;
}

PhenotypeCatalog parse_phenotype_catalog(std::string_view text) {
  PhenotypeCatalog catalog;
  catalog.categories = phenotype_categories();
  int line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.rfind(',');
    if (comma == std::string_view::npos) {
      throw ConfigError("phenotype catalog line " + std::to_string(line_no) + ": expected code,category_index");
    }
    const auto code = normalize_code(line.substr(0, comma));
    const auto index_text = detail::trim(line.substr(comma + 1));
    if (line_no == 1 && code == "CODE") continue;
    const auto index = detail::parse_int(index_text);
    if (!index || *index < 0 || *index >= kNumPhenotypes) {
      throw ConfigError("phenotype catalog line " + std::to_string(line_no) + ": category index out of range");
    }
    auto [it, inserted] = catalog.code_map.emplace(code, static_cast<int>(*index));
    if (!inserted && it->second != *index) {
      throw ConfigError("phenotype catalog: code " + code + " listed under two categories");
    }
  }
  return catalog;
}

PhenotypeCatalog load_phenotype_catalog(const std::filesystem::path& path) {
  return parse_phenotype_catalog(detail::read_file(path));
}

void write_phenotype_catalog(const PhenotypeCatalog& catalog, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write phenotype catalog " + path.string());
  out << "code,category_index\n";
  for (const auto& [code, index] : catalog.code_map) out << code << ',' << index << '\n';
}

}  // namespace icubench
