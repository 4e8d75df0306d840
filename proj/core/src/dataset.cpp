#include "icubench/dataset.hpp"

#include <algorithm>

#include "icubench/errors.hpp"

namespace icubench {

namespace fs = std::filesystem;

std::size_t Dataset::index_of(StayId id) const {
  auto it = by_stay.find(id);
  if (it == by_stay.end()) throw std::out_of_range("stay " + std::to_string(id) + " is not in the dataset");
  return it->second;
}

void Dataset::finalize() {
  if (metas.size() != grids.size()) throw std::invalid_argument("dataset: metas and grids are not aligned");
  by_stay.clear();
  for (std::size_t i = 0; i < metas.size(); ++i) {
    if (grids[i].stay_id != metas[i].stay_id) throw std::invalid_argument("dataset: metas and grids are not aligned");
    by_stay.emplace(metas[i].stay_id, i);
  }
}

Dataset load_dataset(const fs::path& data_dir, const LoadOptions& options) {
  const auto require = [&](const char* name) {
    auto p = data_dir / name;
    if (!fs::exists(p)) throw DataError("missing input table: " + p.string());
    return p;
  };
  const auto patient_path = require("patient.csv");
  const auto lab_path = require("lab.csv");
  const auto nc_path = require("nurseCharting.csv");
  const auto dx_path = require("diagnosis.csv");

  Dataset d;
  d.schema = options.schema;
  d.policy = options.policy;
  auto metas = load_stay_meta(eicu_source(TableKind::patient, patient_path), d.ingestion);

  std::unordered_map<StayId, std::size_t> meta_index;
  for (std::size_t i = 0; i < metas.size(); ++i) meta_index.emplace(metas[i].stay_id, i);

  std::unordered_map<StayId, std::vector<StayRecordRaw>> records;
  const auto sink = [&](StayRecordRaw&& r) {
    if (!meta_index.count(r.stay_id)) return;
    d.record_counts[r.stay_id] += 1;
    records[r.stay_id].push_back(std::move(r));
  };
  load_records(eicu_source(TableKind::lab, lab_path), sink, d.ingestion);
  load_records(eicu_source(TableKind::nursecharting, nc_path), sink, d.ingestion);

  d.diagnoses = load_diagnoses(eicu_source(TableKind::diagnosis, dx_path), d.ingestion);
  for (auto& m : metas) {
    if (auto it = d.diagnoses.find(m.stay_id); it != d.diagnoses.end()) m.icd9_codes = it->second;
  }

  fs::path catalog_path = options.catalog;
  if (catalog_path.empty() && fs::exists(data_dir / "phenotype_catalog.csv")) {
    catalog_path = data_dir / "phenotype_catalog.csv";
  }
  if (!catalog_path.empty()) {
    d.catalog = load_phenotype_catalog(catalog_path);
  } else {
    d.catalog.categories = phenotype_categories();
  }

  d.base = select_base_cohort(metas, d.record_counts);
  d.base.name = "base";
  std::vector<StayId> included = d.base.included;
  std::sort(included.begin(), included.end());
  d.metas.reserve(included.size());
  d.grids.reserve(included.size());
  for (StayId id : included) {
    const auto& meta = metas[meta_index.at(id)];
    auto stay_records = static_records(meta);
    if (auto it = records.find(id); it != records.end()) {
      stay_records.insert(stay_records.end(), std::make_move_iterator(it->second.begin()),
                          std::make_move_iterator(it->second.end()));
      records.erase(it);
    }
    const int n_hours = grid_hours(meta.unit_discharge_offset_minutes, d.policy.max_hours);
    auto grid = bin_hourly(stay_records, id, n_hours, d.dict, d.policy);
    impute(grid, d.schema, d.policy);
    d.metas.push_back(meta);
    d.grids.push_back(std::move(grid));
  }
  d.finalize();
  return d;
}

std::string_view variable_set_name(VariableSet v) {
  switch (v) {
    case VariableSet::all:
      return "all";
    case VariableSet::numerical_only:
      return "numerical_only";
    case VariableSet::categorical_only:
      return "categorical_only";
  }
  return "?";
}

std::optional<VariableSet> variable_set_from(std::string_view name) {
  if (name == "all") return VariableSet::all;
  if (name == "numerical_only" || name == "numerical") return VariableSet::numerical_only;
  if (name == "categorical_only" || name == "categorical") return VariableSet::categorical_only;
  return std::nullopt;
}

GridSource::GridSource(const Dataset& data, std::vector<TaskInstance> instances, const Vocabularies& vocabs,
                       const Standardizer& standardizer)
    : data_(data), instances_(std::move(instances)), vocabs_(vocabs), standardizer_(standardizer) {
  grid_index_.reserve(instances_.size());
  for (const auto& inst : instances_) {
    const auto gi = data_.index_of(inst.stay_id);
    if (inst.window.start < 0 || inst.window.end > data_.grids[gi].n_hours || inst.window.length() < 1) {
      throw std::invalid_argument("instance window outside its stay grid");
    }
    grid_index_.push_back(gi);
  }
}

void GridSource::fill(std::span<const std::size_t> indices, nn::SequenceBatch& batch) const {
  std::vector<int> lengths;
  lengths.reserve(indices.size());
  for (auto i : indices) lengths.push_back(length(i));
  batch.reset(std::move(lengths), kNumNumerical, kNumCategorical);
  for (int b = 0; b < batch.size; ++b) {
    const auto& inst = instances_[indices[b]];
    const auto& grid = data_.grids[grid_index_[indices[b]]];
    for (int t = 0; t < inst.window.length(); ++t) {
      const int row = inst.window.start + t;
      auto& num = batch.numeric[t];
      auto& cat = batch.categorical[t];
      for (int c = 0; c < kNumNumerical; ++c) num(c, b) = standardizer_.apply(c, grid.numeric(row, c));
      for (int v = 0; v < kNumCategorical; ++v) cat(v, b) = vocabs_.index(v, grid.categorical(row, v));
    }
  }
}

nn::Mat GridSource::labels(std::span<const std::size_t> indices) const { return label_matrix(instances_, indices); }

nn::Mat label_matrix(std::span<const TaskInstance> instances, std::span<const std::size_t> indices) {
  if (indices.empty()) return nn::Mat(0, 0);
  const bool pheno = std::holds_alternative<PhenotypeMask>(instances[indices.front()].label);
  nn::Mat y(pheno ? kNumPhenotypes : 1, static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const auto& label = instances[indices[j]].label;
    if (const auto* bin = std::get_if<BinaryLabel>(&label)) {
      y(0, col) = bin->value;
    } else if (const auto* los = std::get_if<RemainingLos>(&label)) {
      y(0, col) = los->days;
    } else {
      const auto& bits = std::get<PhenotypeMask>(label).bits;
      for (int k = 0; k < kNumPhenotypes; ++k) y(k, col) = bits[k] ? 1.0 : 0.0;
    }
  }
  return y;
}

}  // namespace icubench
