#include "icubench/cohort.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace icubench {

namespace {

void check_aligned(std::span<const StayMeta> metas, std::span<const HourlyGrid> grids) {
  if (metas.size() != grids.size()) throw std::invalid_argument("metas and grids differ in length");
  for (std::size_t i = 0; i < metas.size(); ++i) {
    if (metas[i].stay_id != grids[i].stay_id) throw std::invalid_argument("metas and grids are not aligned");
  }
}

void sort_instances(std::vector<TaskInstance>& out) {
  std::stable_sort(out.begin(), out.end(), [](const TaskInstance& a, const TaskInstance& b) {
    return a.stay_id != b.stay_id ? a.stay_id < b.stay_id : a.window.start < b.window.start;
  });
}

class ReportBuilder {
 public:
  ReportBuilder(CohortReport* report, std::string name, std::vector<std::string> rules) : report_(report) {
    if (!report_) return;
    *report_ = {};
    report_->name = std::move(name);
    for (auto& r : rules) report_->excluded.emplace_back(std::move(r), 0);
  }
  void seen() {
    if (report_) ++report_->total;
  }
  void exclude(std::size_t rule) {
    if (report_) ++report_->excluded.at(rule).second;
  }
  void include(StayId id) {
    if (report_) report_->included.push_back(id);
  }

 private:
  CohortReport* report_;
};

}  // namespace

std::int64_t CohortReport::excluded_total() const {
  std::int64_t n = 0;
  for (const auto& [_, c] : excluded) n += c;
  return n;
}

std::int64_t CohortReport::excluded_by(std::string_view rule) const {
  for (const auto& [r, c] : excluded) {
    if (r == rule) return c;
  }
  return 0;
}

std::string CohortReport::to_text() const {
  std::ostringstream out;
  out << "cohort " << name << ": total=" << total << " included=" << included.size() << '\n';
  for (const auto& [rule, count] : excluded) out << "  excluded (" << rule << "): " << count << '\n';
  return out.str();
}

std::vector<int> WindowSchedule::points(int n_hours) const {
  std::vector<int> out;
  for (int t = derivation_hours; t < n_hours; t += slide_hours) out.push_back(t);
  return out;
}

CohortReport select_base_cohort(std::span<const StayMeta> metas, const std::map<StayId, std::int64_t>& record_counts) {
  CohortReport report;
  ReportBuilder rb(&report, "base", {"age <= 18", "fewer than 15 records", "no unit stay time"});
  for (const auto& m : metas) {
    rb.seen();
    if (!(m.age > 18.0)) {
      rb.exclude(0);
      continue;
    }
    const auto it = record_counts.find(m.stay_id);
    const std::int64_t records = it == record_counts.end() ? 0 : it->second;
    if (records < kMinRecords) {
      rb.exclude(1);
      continue;
    }
    if (m.unit_discharge_offset_minutes <= 0) {
      rb.exclude(2);
      continue;
    }
    rb.include(m.stay_id);
  }
  return report;
}

std::vector<TaskInstance> build_mortality_instances(std::span<const StayMeta> metas,
                                                    std::span<const HourlyGrid> grids, int horizon_hours,
                                                    CohortReport* report) {
  check_aligned(metas, grids);
  if (horizon_hours <= 0 || horizon_hours > kMortalityMinStayHours) {
    throw std::invalid_argument("mortality horizon must be in (0, 48] hours");
  }
  ReportBuilder rb(report, "mortality" + std::to_string(horizon_hours),
                   {"missing hospital discharge status", "unit stay shorter than 48 h"});
  std::vector<TaskInstance> out;
  for (std::size_t i = 0; i < metas.size(); ++i) {
    const auto& m = metas[i];
    rb.seen();
    if (m.hospital_discharge_status == DischargeStatus::missing) {
      rb.exclude(0);
      continue;
    }
    if (m.unit_discharge_offset_minutes < kMortalityMinStayHours * 60 || grids[i].n_hours < horizon_hours) {
      rb.exclude(1);
      continue;
    }
    rb.include(m.stay_id);
    const int label = m.hospital_discharge_status == DischargeStatus::expired ? 1 : 0;
    out.push_back({m.stay_id, {0, horizon_hours}, BinaryLabel{label}, Task::mortality});
  }
  sort_instances(out);
  return out;
}

std::vector<TaskInstance> build_los_instances(std::span<const StayMeta> metas, std::span<const HourlyGrid> grids,
                                              CohortReport* report, const WindowSchedule& schedule) {
  check_aligned(metas, grids);
  ReportBuilder rb(report, "los", {"unit stay without a 13th hour"});
  std::vector<TaskInstance> out;
  for (std::size_t i = 0; i < metas.size(); ++i) {
    const auto& m = metas[i];
    rb.seen();
    const auto points = schedule.points(grids[i].n_hours);
    if (points.empty()) {
      rb.exclude(0);
      continue;
    }
    rb.include(m.stay_id);
    const double los_days = m.unit_discharge_offset_minutes / 1440.0;
    for (int t : points) {
      const double remaining = std::max(0.0, los_days - t / 24.0);
      out.push_back({m.stay_id, {t - schedule.derivation_hours, t}, RemainingLos{remaining}, Task::los});
    }
  }
  sort_instances(out);
  return out;
}

std::vector<TaskInstance> build_decomp_instances(std::span<const StayMeta> metas, std::span<const HourlyGrid> grids,
                                                 CohortReport* report, const WindowSchedule& schedule) {
  check_aligned(metas, grids);
  ReportBuilder rb(report, "decompensation", {"no prediction point before discharge or death"});
  std::vector<TaskInstance> out;
  for (std::size_t i = 0; i < metas.size(); ++i) {
    const auto& m = metas[i];
    rb.seen();
    std::vector<TaskInstance> stay_out;
    for (int t : schedule.points(grids[i].n_hours)) {
      const std::int64_t t_min = static_cast<std::int64_t>(t) * 60;
      int label = 0;
      if (m.death_offset_minutes) {
        const std::int64_t death = *m.death_offset_minutes;
        if (death <= t_min) break;
        label = death <= t_min + 24 * 60 ? 1 : 0;
      }
      stay_out.push_back({m.stay_id, {t - schedule.derivation_hours, t}, BinaryLabel{label}, Task::decompensation});
    }
    if (stay_out.empty()) {
      rb.exclude(0);
      continue;
    }
    rb.include(m.stay_id);
    out.insert(out.end(), stay_out.begin(), stay_out.end());
  }
  sort_instances(out);
  return out;
}

PhenotypeMask phenotype_mask(const std::set<std::string>& codes, const PhenotypeCatalog& catalog) {
  PhenotypeMask mask;
  for (const auto& code : codes) {
    if (auto c = catalog.category_of(code)) mask.bits.set(static_cast<std::size_t>(*c));
  }
  return mask;
}

std::vector<TaskInstance> build_phenotype_instances(std::span<const StayMeta> metas,
                                                    std::span<const HourlyGrid> grids,
                                                    const std::map<StayId, std::set<std::string>>& diagnoses,
                                                    const PhenotypeCatalog& catalog, CohortReport* report) {
  check_aligned(metas, grids);
  ReportBuilder rb(report, "phenotyping", {"no diagnosis mapping into the catalog", "empty grid"});
  std::vector<TaskInstance> out;
  for (std::size_t i = 0; i < metas.size(); ++i) {
    const auto& m = metas[i];
    rb.seen();
    const auto it = diagnoses.find(m.stay_id);
    const auto mask = it == diagnoses.end() ? PhenotypeMask{} : phenotype_mask(it->second, catalog);
    if (mask.bits.none()) {
      rb.exclude(0);
      continue;
    }
    if (grids[i].n_hours <= 0) {
      rb.exclude(1);
      continue;
    }
    rb.include(m.stay_id);
    out.push_back({m.stay_id, {0, grids[i].n_hours}, mask, Task::phenotyping});
  }
  sort_instances(out);
  return out;
}

}  // namespace icubench
