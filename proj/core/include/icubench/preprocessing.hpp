#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icubench/data_model.hpp"
#include "icubench/rng.hpp"

namespace icubench {

/// How several measurements inside one bin collapse to a single value.
enum class Aggregator {
  /// Last parseable measurement, regardless of trailing garbage.
  last_valid,
  /// Last measurement if it parses, otherwise the mean of the parseable ones.
  mean_fallback,
};

enum class ImputeMode {
  /// Carry the last observation forward, normal value before the first one.
  carry_forward_then_normal,
  /// Every unobserved numeric cell takes the normal value.
  normal_only,
};

struct BinPolicy {
  int bin_minutes = 60;
  Aggregator aggregator = Aggregator::mean_fallback;
  ImputeMode impute = ImputeMode::carry_forward_then_normal;
  int max_hours = 500;
};

/// Patient-table values (age, height, weight, gender, ethnicity, admission
/// diagnosis) as offset-0 records so they flow through binning like charted
/// data. Empty cells produce no record.
std::vector<StayRecordRaw> static_records(const StayMeta& meta);

/// Bins one stay's records into an n_hours grid. Records at negative
/// offsets or past the last hour are dropped; unparseable-only bins stay
/// unobserved. Categorical strings are interned into `dict`.
HourlyGrid bin_hourly(std::span<const StayRecordRaw> records, StayId stay_id, int n_hours, CategoryDictionary& dict,
                      const BinPolicy& policy = {});

/// Fills every unobserved cell. observed masks are left untouched.
void impute(HourlyGrid& grid, const Schema& schema, const BinPolicy& policy = {});

/// True when every numeric cell is finite and every categorical code is a
/// valid dictionary code.
bool is_complete(const HourlyGrid& grid, const CategoryDictionary& dict);

/// Per-fold vocabularies: sorted distinct observed strings with "unknown"
/// at index 0, and a remap from dictionary codes to vocab indices.
struct Vocabularies {
  std::array<std::vector<std::string>, kNumCategorical> values;
  std::array<std::vector<std::int32_t>, kNumCategorical> remap;

  int size(int column) const { return static_cast<int>(values[column].size()); }
  /// Vocab index of a dictionary code; 0 when unseen during training.
  std::int32_t index(int column, std::int32_t code) const {
    const auto& r = remap[column];
    return code >= 0 && static_cast<std::size_t>(code) < r.size() ? r[code] : 0;
  }
  std::vector<int> sizes() const;
  /// Copy of `schema` with categorical vocabs replaced by these.
  Schema apply(Schema schema) const;
  /// Stable digest of the vocab contents.
  std::uint64_t hash() const;
};

/// Builds vocabularies from observed categorical cells of `grids` (the
/// training side of a fold).
Vocabularies build_vocabs(std::span<const HourlyGrid* const> grids, const CategoryDictionary& dict);

struct OversampleResult {
  /// Indices into the input: every original once, in order, followed by
  /// the minority-class duplicates.
  std::vector<std::size_t> indices;
  bool single_class = false;
};

/// Random duplication with replacement of the minority class until both
/// classes have equal counts. Labels must be 0/1.
OversampleResult oversample(std::span<const int> labels, Rng& rng);

/// Same, on binary task instances.
std::vector<TaskInstance> oversample(const std::vector<TaskInstance>& instances, Rng& rng,
                                     bool* single_class = nullptr);

/// Optional z-scoring of numeric channels, fitted on training grids.
struct Standardizer {
  std::array<double, kNumNumerical> mean{};
  std::array<double, kNumNumerical> scale{};

  static Standardizer identity();
  static Standardizer fit(std::span<const HourlyGrid* const> grids);
  double apply(int channel, double v) const { return (v - mean[channel]) / scale[channel]; }
};

/// On-disk grid cache. Layout (little-endian):
///   "ICUGRID1" | u64 key | u64 n_grids
///   per grid: i64 stay_id | i32 n_hours | f64[n_hours*13] numeric (row-major)
///             | i32[n_hours*7] categorical | u8[n_hours*13] observed
///             | u8[n_hours*7] categorical observed
///   dictionary: per categorical column u32 n, then n x (u32 len | bytes)
void write_grid_cache(const std::filesystem::path& path, std::uint64_t key, const std::vector<HourlyGrid>& grids,
                      const CategoryDictionary& dict);

struct GridCache {
  std::vector<HourlyGrid> grids;
  CategoryDictionary dict;
};

/// nullopt when the file is absent or was written under another key;
/// DataError when it is truncated or corrupt.
std::optional<GridCache> read_grid_cache(const std::filesystem::path& path, std::uint64_t key);

/// Digest of input file contents plus everything that shapes the grids.
std::uint64_t grid_cache_key(std::span<const std::filesystem::path> inputs, const BinPolicy& policy,
                             const Schema& schema);

}  // namespace icubench
