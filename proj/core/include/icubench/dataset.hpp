#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "icubench/cohort.hpp"
#include "icubench/data_model.hpp"
#include "icubench/ingestion.hpp"
#include "icubench/neural/trainer.hpp"
#include "icubench/preprocessing.hpp"

namespace icubench {

/// The base cohort of a data directory, binned and imputed.
struct Dataset {
  Schema schema;
  BinPolicy policy;
  /// Base-cohort stays sorted by stay id; grids[i] belongs to metas[i].
  std::vector<StayMeta> metas;
  std::vector<HourlyGrid> grids;
  CategoryDictionary dict;
  PhenotypeCatalog catalog;
  std::map<StayId, std::set<std::string>> diagnoses;
  /// Mapped charted records per stay of the patient table (static patient
  /// fields excluded).
  std::map<StayId, std::int64_t> record_counts;
  CohortReport base;
  IngestionReport ingestion;

  std::size_t index_of(StayId id) const;
  const HourlyGrid& grid(StayId id) const { return grids[index_of(id)]; }
  const StayMeta& meta(StayId id) const { return metas[index_of(id)]; }

  // filled by load_dataset / finalize()
  std::unordered_map<StayId, std::size_t> by_stay;
  void finalize();
};

struct LoadOptions {
  Schema schema = canonical_schema();
  BinPolicy policy;
  /// Phenotype catalog; when empty, `phenotype_catalog.csv` in the data
  /// directory is used if present.
  std::filesystem::path catalog;
};

/// Reads patient.csv, lab.csv, nurseCharting.csv and diagnosis.csv from
/// `data_dir` (eICU column layout), applies the base cohort rules and bins
/// every included stay. Missing files raise DataError.
Dataset load_dataset(const std::filesystem::path& data_dir, const LoadOptions& options = {});

enum class VariableSet { all, numerical_only, categorical_only };

std::string_view variable_set_name(VariableSet v);
std::optional<VariableSet> variable_set_from(std::string_view name);

/// Task instances over a dataset's grids, exposed to the trainer. Numeric
/// channels pass through the standardizer; categorical codes go through
/// the fold vocabularies.
class GridSource : public nn::SequenceSource {
 public:
  GridSource(const Dataset& data, std::vector<TaskInstance> instances, const Vocabularies& vocabs,
             const Standardizer& standardizer);

  std::size_t size() const override { return instances_.size(); }
  int length(std::size_t i) const override { return instances_[i].window.length(); }
  void fill(std::span<const std::size_t> indices, nn::SequenceBatch& batch) const override;
  nn::Mat labels(std::span<const std::size_t> indices) const override;

  const std::vector<TaskInstance>& instances() const { return instances_; }

 private:
  const Dataset& data_;
  std::vector<TaskInstance> instances_;
  std::vector<std::size_t> grid_index_;
  const Vocabularies& vocabs_;
  const Standardizer& standardizer_;
};

/// Label values as a [outputs x n] matrix in instance order.
nn::Mat label_matrix(std::span<const TaskInstance> instances, std::span<const std::size_t> indices);

}  // namespace icubench
