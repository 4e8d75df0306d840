#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "icubench/errors.hpp"
#include "icubench/experiment.hpp"
#include "text_util.hpp"

namespace icubench {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kDash = "—";

std::string fixed(double v, int precision = 4) {
  if (std::isnan(v)) return kDash;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

json number(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

/// Left-aligned columns separated by two spaces.
std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  const auto display = [](const std::string& s) {
    // count UTF-8 code points so "—" and "±" take one column
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
  };
  for (const auto& r : rows) {
    if (width.size() < r.size()) width.resize(r.size(), 0);
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], display(r[i]));
  }
  std::ostringstream out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      line += r[i];
      if (i + 1 < r.size()) line += std::string(width[i] - display(r[i]) + 2, ' ');
    }
    out << line << '\n';
  }
  return out.str();
}

}  // namespace

std::string report_json(const EvalReport& r) {
  json j;
  j["task"] = r.task;
  j["model"] = r.model;
  j["seed"] = r.seed;
  j["folds"] = r.folds;
  json cfg = json::object();
  for (const auto& [k, v] : r.config) cfg[k] = v;
  j["config"] = cfg;
  j["cohort"] = {{"stays", r.cohort_stays}, {"patients", r.cohort_patients}, {"instances", r.instances}};
  j["input_width"] = r.input_width;
  j["parameters"] = r.parameters;
  json folds = json::array();
  for (const auto& f : r.fold_results) {
    json jf;
    jf["fold"] = f.fold;
    jf["train_patients"] = f.train_patients;
    jf["test_patients"] = f.test_patients;
    jf["train_instances"] = f.train_instances;
    jf["train_rows"] = f.train_rows;
    jf["test_instances"] = f.test_instances;
    jf["final_train_loss"] = number(f.final_train_loss);
    jf["vocab_hash"] = f.vocab_hash;
    json m = json::object();
    for (const auto& [k, v] : f.metrics) m[k] = number(v);
    jf["metrics"] = m;
    json ph = json::array();
    for (double v : f.phenotype_auroc) ph.push_back(number(v));
    jf["phenotype_auroc"] = ph;
    jf["error"] = f.error ? json(*f.error) : json(nullptr);
    folds.push_back(jf);
  }
  j["fold_results"] = folds;
  json agg = json::object();
  for (const auto& [k, a] : r.aggregate) {
    agg[k] = {{"mean", number(a.mean)}, {"sd", number(a.sd)}, {"ci95_half_width", number(a.half_width)}, {"k", a.k}};
  }
  j["aggregate"] = agg;
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

EvalReport parse_report_json(std::string_view text) {
  EvalReport r;
  try {
    const auto j = json::parse(text);
    r.task = j.at("task").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.folds = j.at("folds").get<int>();
    for (const auto& [k, v] : j.at("config").items()) r.config.emplace_back(k, v.get<std::string>());
    r.cohort_stays = j.at("cohort").at("stays").get<std::int64_t>();
    r.cohort_patients = j.at("cohort").at("patients").get<std::int64_t>();
    r.instances = j.at("cohort").at("instances").get<std::int64_t>();
    r.input_width = j.at("input_width").get<int>();
    r.parameters = j.at("parameters").get<std::int64_t>();
    for (const auto& jf : j.at("fold_results")) {
      FoldResult f;
      f.fold = jf.at("fold").get<int>();
      f.train_patients = jf.at("train_patients").get<std::int64_t>();
      f.test_patients = jf.at("test_patients").get<std::int64_t>();
      f.train_instances = jf.at("train_instances").get<std::int64_t>();
      f.train_rows = jf.at("train_rows").get<std::int64_t>();
      f.test_instances = jf.at("test_instances").get<std::int64_t>();
      f.final_train_loss = number_from(jf.at("final_train_loss"));
      f.vocab_hash = jf.at("vocab_hash").get<std::uint64_t>();
      for (const auto& [k, v] : jf.at("metrics").items()) f.metrics.emplace_back(k, number_from(v));
      for (const auto& v : jf.at("phenotype_auroc")) f.phenotype_auroc.push_back(number_from(v));
      if (!jf.at("error").is_null()) f.error = jf.at("error").get<std::string>();
      r.fold_results.push_back(std::move(f));
    }
    for (const auto& [k, v] : j.at("aggregate").items()) {
      FoldAggregate a;
      a.mean = number_from(v.at("mean"));
      a.sd = number_from(v.at("sd"));
      a.half_width = number_from(v.at("ci95_half_width"));
      a.k = v.at("k").get<int>();
      r.aggregate.emplace_back(k, a);
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  return r;
}

EvalReport read_report(const std::filesystem::path& path) { return parse_report_json(detail::read_file(path)); }

std::string report_text(const EvalReport& r) {
  std::ostringstream out;
  out << "task " << r.task << ", model " << r.model << ", " << r.folds << " folds, seed " << r.seed << '\n';
  out << "cohort: " << r.cohort_stays << " stays, " << r.cohort_patients << " patients, " << r.instances
      << " instances\n";
  out << "input width " << r.input_width << ", " << r.parameters << " trainable parameters\n\n";

  std::vector<std::string> names;
  for (const auto& f : r.fold_results) {
    for (const auto& [k, v] : f.metrics) {
      if (std::find(names.begin(), names.end(), k) == names.end()) names.push_back(k);
    }
  }
  for (const auto& [k, a] : r.aggregate) {
    if (std::find(names.begin(), names.end(), k) == names.end()) names.push_back(k);
  }
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"fold", "train", "test"};
  header.insert(header.end(), names.begin(), names.end());
  rows.push_back(header);
  for (const auto& f : r.fold_results) {
    std::vector<std::string> row = {std::to_string(f.fold), std::to_string(f.train_instances),
                                    std::to_string(f.test_instances)};
    for (const auto& n : names) {
      const auto v = f.metric(n);
      row.push_back(f.error ? "error" : v ? fixed(*v) : kDash);
    }
    rows.push_back(row);
  }
  std::vector<std::string> mean_row = {"mean", "", ""};
  std::vector<std::string> ci_row = {"ci95", "", ""};
  for (const auto& n : names) {
    auto it = std::find_if(r.aggregate.begin(), r.aggregate.end(), [&](const auto& kv) { return kv.first == n; });
    mean_row.push_back(it == r.aggregate.end() ? kDash : fixed(it->second.mean));
    ci_row.push_back(it == r.aggregate.end() ? kDash : "±" + fixed(it->second.half_width));
  }
  rows.push_back(mean_row);
  rows.push_back(ci_row);
  out << render_table(rows);

  for (const auto& f : r.fold_results) {
    if (f.phenotype_auroc.empty()) continue;
    out << "\nper-phenotype AUROC (mean over folds)\n";
    const auto cats = phenotype_categories();
    std::vector<std::vector<std::string>> prow = {{"phenotype", "type", "auroc"}};
    for (std::size_t k = 0; k < cats.size(); ++k) {
      double sum = 0.0;
      int n = 0;
      for (const auto& g : r.fold_results) {
        if (k < g.phenotype_auroc.size() && !std::isnan(g.phenotype_auroc[k])) {
          sum += g.phenotype_auroc[k];
          ++n;
        }
      }
      prow.push_back({cats[k].name, std::string(phenotype_type_name(cats[k].type)),
                      n ? fixed(sum / n) : std::string(kDash)});
    }
    out << render_table(prow);
    break;
  }

  if (!r.warnings.empty()) {
    out << "\nwarnings\n";
    for (const auto& w : r.warnings) out << "  " << w << '\n';
  }
  out << "\nconfig\n";
  std::vector<std::vector<std::string>> crow;
  for (const auto& [k, v] : r.config) crow.push_back({"  " + k, v.empty() ? std::string(kDash) : v});
  out << render_table(crow);
  out << "\nwall-clock " << fixed(r.wall_clock_seconds, 1) << " s\n";
  return out.str();
}

std::string predictions_csv(const EvalReport& r) {
  std::ostringstream out;
  const std::size_t width = r.predictions.empty() ? 1 : r.predictions.front().score.size();
  out << "fold,stay_id,window_start,window_end";
  for (const char* what : {"label", "score"}) {
    for (std::size_t k = 0; k < width; ++k) out << ',' << what << (width > 1 ? "_" + std::to_string(k) : "");
  }
  out << '\n';
  for (const auto& p : r.predictions) {
    out << p.fold << ',' << p.stay_id << ',' << p.window.start << ',' << p.window.end;
    for (double v : p.label) out << ',' << detail::format_double(v);
    for (double v : p.score) out << ',' << detail::format_double(v);
    out << '\n';
  }
  return out.str();
}

Comparison compare(const EvalReport& a, const EvalReport& b, TTestMode mode) {
  if (a.task != b.task) throw DataError("compare: reports are for different tasks (" + a.task + ", " + b.task + ")");
  if (a.folds != b.folds || a.fold_results.size() != b.fold_results.size()) {
    throw DataError("compare: reports have different fold counts");
  }
  Comparison c;
  c.task = a.task;
  c.model_a = a.model;
  c.model_b = b.model;
  const auto task = task_spec_from(a.task);
  if (!task) throw DataError("compare: unknown task '" + a.task + "'");
  for (const auto& name : metric_names(task_of(*task))) {
    std::vector<double> va, vb;
    if (mode == TTestMode::paired) {
      // pair fold by fold, skipping folds undefined on either side
      for (std::size_t i = 0; i < a.fold_results.size(); ++i) {
        const auto& fa = a.fold_results[i];
        const auto& fb = b.fold_results[i];
        const auto x = fa.error ? std::nullopt : fa.metric(name);
        const auto y = fb.error ? std::nullopt : fb.metric(name);
        if (x && y && !std::isnan(*x) && !std::isnan(*y)) {
          va.push_back(*x);
          vb.push_back(*y);
        }
      }
    } else {
      va = a.fold_values(name);
      vb = b.fold_values(name);
    }
    if (va.size() < 2 || vb.size() < 2) continue;
    ComparisonRow row;
    row.metric = name;
    row.a = aggregate_folds(va);
    row.b = aggregate_folds(vb);
    row.test = t_test(va, vb, mode);
    c.rows.push_back(row);
  }
  return c;
}

std::string Comparison::to_text() const {
  std::ostringstream out;
  out << "task " << task << ": A = " << model_a << ", B = " << model_b << '\n';
  std::vector<std::vector<std::string>> rows = {{"metric", "A mean", "A ci95", "B mean", "B ci95", "t", "p", "flag"}};
  for (const auto& r : this->rows) {
    rows.push_back({r.metric, fixed(r.a.mean), "±" + fixed(r.a.half_width), fixed(r.b.mean),
                    "±" + fixed(r.b.half_width), fixed(r.test.t, 3), fixed(r.test.p, 4),
                    r.test.flag().empty() ? "none" : r.test.flag()});
  }
  out << render_table(rows);
  out << "† p < 0.05, ‡ p < 0.1 (two-tailed)\n";
  return out.str();
}

namespace {

/// Linear-interpolation quantile of sorted values.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::string median_iqr(std::vector<double> v) {
  if (v.empty()) return kDash;
  std::sort(v.begin(), v.end());
  return fixed(quantile(v, 0.5), 2) + " [" + fixed(quantile(v, 0.25), 2) + "-" + fixed(quantile(v, 0.75), 2) + "]";
}

std::string count_pct(std::size_t n, std::size_t total) {
  if (total == 0) return kDash;
  return std::to_string(n) + " (" + fixed(100.0 * static_cast<double>(n) / static_cast<double>(total), 2) + "%)";
}

}  // namespace

std::string summarize_cohort(std::span<const StayMeta> metas, std::span<const HourlyGrid> grids) {
  if (!grids.empty() && grids.size() != metas.size()) throw std::invalid_argument("summarize_cohort: metas and grids differ");
  struct Stratum {
    std::string name;
    std::vector<std::size_t> idx;
  };
  std::vector<Stratum> strata = {{"All", {}}, {"Survived", {}}, {"Expired", {}}};
  for (std::size_t i = 0; i < metas.size(); ++i) {
    strata[0].idx.push_back(i);
    if (metas[i].hospital_discharge_status == DischargeStatus::alive) strata[1].idx.push_back(i);
    if (metas[i].hospital_discharge_status == DischargeStatus::expired) strata[2].idx.push_back(i);
  }
  std::set<std::string> genders, ethnicities;
  for (const auto& m : metas) {
    genders.insert(m.gender.empty() ? "unknown" : m.gender);
    ethnicities.insert(m.ethnicity.empty() ? "unknown" : m.ethnicity);
  }

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"characteristic"};
  for (const auto& s : strata) header.push_back(s.name);
  rows.push_back(header);
  const auto add = [&](const std::string& label, auto cell) {
    std::vector<std::string> row = {label};
    for (const auto& s : strata) row.push_back(cell(s.idx));
    rows.push_back(row);
  };
  add("ICU stays, n", [&](const auto& idx) { return idx.empty() ? std::string(kDash) : std::to_string(idx.size()); });
  add("Patients, n", [&](const auto& idx) {
    std::set<PatientId> p;
    for (auto i : idx) p.insert(metas[i].patient_id);
    return idx.empty() ? std::string(kDash) : std::to_string(p.size());
  });
  add("Age, median [IQR]", [&](const auto& idx) {
    std::vector<double> v;
    for (auto i : idx) v.push_back(metas[i].age);
    return median_iqr(v);
  });
  for (const auto& g : genders) {
    add("Gender " + g + ", n (%)", [&](const auto& idx) {
      std::size_t n = 0;
      for (auto i : idx) n += (metas[i].gender.empty() ? "unknown" : metas[i].gender) == g;
      return count_pct(n, idx.size());
    });
  }
  for (const auto& e : ethnicities) {
    add("Ethnicity " + e + ", n (%)", [&](const auto& idx) {
      std::size_t n = 0;
      for (auto i : idx) n += (metas[i].ethnicity.empty() ? "unknown" : metas[i].ethnicity) == e;
      return count_pct(n, idx.size());
    });
  }
  add("Unit LoS days, median [IQR]", [&](const auto& idx) {
    std::vector<double> v;
    for (auto i : idx) v.push_back(metas[i].unit_discharge_offset_minutes / 1440.0);
    return median_iqr(v);
  });
  if (!grids.empty()) {
    add("Hourly rows, median [IQR]", [&](const auto& idx) {
      std::vector<double> v;
      for (auto i : idx) v.push_back(grids[i].n_hours);
      return median_iqr(v);
    });
  }
  add("Died in unit, n (%)", [&](const auto& idx) {
    std::size_t n = 0;
    for (auto i : idx) n += metas[i].death_offset_minutes.has_value();
    return count_pct(n, idx.size());
  });
  const std::size_t known = strata[1].idx.size() + strata[2].idx.size();
  std::ostringstream out;
  out << render_table(rows);
  out << "Hospital mortality: " << (known ? fixed(100.0 * static_cast<double>(strata[2].idx.size()) / known, 2) + "%"
                                          : std::string(kDash))
      << " of " << known << " stays with a known discharge status\n";
  return out.str();
}

std::string cohort_audit(const Dataset& data) {
  std::ostringstream out;
  out << data.base.to_text();
  std::vector<std::vector<std::string>> rows = {{"task", "patients", "stays", "instances"}};
  for (auto t : {TaskSpec::mortality24, TaskSpec::mortality48, TaskSpec::los, TaskSpec::phenotyping,
                 TaskSpec::decompensation}) {
    CohortReport rep;
    const auto inst = build_task_instances(data, t, &rep);
    rep.name = std::string(task_spec_name(t));
    out << rep.to_text();
    std::set<StayId> stays;
    std::set<PatientId> patients;
    for (const auto& i : inst) {
      stays.insert(i.stay_id);
      patients.insert(data.meta(i.stay_id).patient_id);
    }
    rows.push_back({rep.name, std::to_string(patients.size()), std::to_string(stays.size()), std::to_string(inst.size())});
  }
  out << '\n' << render_table(rows);
  return out.str();
}

}  // namespace icubench
