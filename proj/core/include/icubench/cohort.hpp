#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "icubench/data_model.hpp"

namespace icubench {

/// Exclusion counts in the order rules were applied.
struct CohortReport {
  std::string name;
  std::int64_t total = 0;
  std::vector<std::pair<std::string, std::int64_t>> excluded;
  std::vector<StayId> included;

  std::int64_t excluded_total() const;
  std::int64_t excluded_by(std::string_view rule) const;
  std::string to_text() const;
};

inline constexpr int kDerivationHours = 12;
inline constexpr int kSlideHours = 6;
inline constexpr int kMinRecords = 15;
inline constexpr int kMortalityMinStayHours = 48;

/// Prediction hours t = 12, 18, 24, ... with t < n_hours; each has the
/// derivation window [t-12, t).
struct WindowSchedule {
  int derivation_hours = kDerivationHours;
  int slide_hours = kSlideHours;

  std::vector<int> points(int n_hours) const;
};

/// Base inclusion: age > 18, at least 15 Table-2 records, a positive unit
/// stay length. Rules apply in that order; a stay counts against the first
/// rule it fails.
CohortReport select_base_cohort(std::span<const StayMeta> metas, const std::map<StayId, std::int64_t>& record_counts);

/// `metas[i]` and `grids[i]` describe the same stay in all builders below.
/// Outputs are sorted by stay id, then window start.

/// One instance per stay with a known hospital discharge status and a unit
/// stay of at least 48 h; window [0, horizon_hours), label = expired.
std::vector<TaskInstance> build_mortality_instances(std::span<const StayMeta> metas,
                                                    std::span<const HourlyGrid> grids, int horizon_hours,
                                                    CohortReport* report = nullptr);

/// Remaining unit LoS in days at each schedule point.
std::vector<TaskInstance> build_los_instances(std::span<const StayMeta> metas, std::span<const HourlyGrid> grids,
                                              CohortReport* report = nullptr, const WindowSchedule& schedule = {});

/// Death within (t, t+24] hours at each schedule point; points at or after
/// the death hour are not generated.
std::vector<TaskInstance> build_decomp_instances(std::span<const StayMeta> metas, std::span<const HourlyGrid> grids,
                                                 CohortReport* report = nullptr,
                                                 const WindowSchedule& schedule = {});

/// Whole-stay window; 25-bit mask of phenotype categories present.
/// Stays with no code mapping into the catalog are excluded.
std::vector<TaskInstance> build_phenotype_instances(std::span<const StayMeta> metas,
                                                    std::span<const HourlyGrid> grids,
                                                    const std::map<StayId, std::set<std::string>>& diagnoses,
                                                    const PhenotypeCatalog& catalog,
                                                    CohortReport* report = nullptr);

PhenotypeMask phenotype_mask(const std::set<std::string>& codes, const PhenotypeCatalog& catalog);

}  // namespace icubench
