#include "icubench/preprocessing.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "icubench/errors.hpp"
#include "text_util.hpp"

namespace icubench {

namespace {

struct BinState {
  double last_parsed = 0.0;
  double sum = 0.0;
  int count = 0;
  bool last_entry_ok = false;
  std::int32_t last_code = 0;
};

}  // namespace

std::vector<StayRecordRaw> static_records(const StayMeta& meta) {
  std::vector<StayRecordRaw> out;
  auto add = [&](Var v, std::string value) {
    if (value.empty()) return;
    out.push_back({meta.stay_id, v, 0, std::move(value)});
  };
  add(Var::Age, detail::format_double(meta.age));
  if (meta.height_cm) add(Var::Height, detail::format_double(*meta.height_cm));
  if (meta.weight_kg) add(Var::Weight, detail::format_double(*meta.weight_kg));
  add(Var::AdmissionDiagnosis, meta.admission_diagnosis);
  add(Var::Ethnicity, meta.ethnicity);
  add(Var::Gender, meta.gender);
  return out;
}

HourlyGrid bin_hourly(std::span<const StayRecordRaw> records, StayId stay_id, int n_hours, CategoryDictionary& dict,
                      const BinPolicy& policy) {
  auto grid = HourlyGrid::empty(stay_id, n_hours);
  if (n_hours <= 0) return grid;

  std::vector<StayRecordRaw> sorted_copy;
  auto by_offset = [](const StayRecordRaw& a, const StayRecordRaw& b) { return a.offset_minutes < b.offset_minutes; };
  if (!std::is_sorted(records.begin(), records.end(), by_offset)) {
    sorted_copy.assign(records.begin(), records.end());
    std::stable_sort(sorted_copy.begin(), sorted_copy.end(), by_offset);
    records = sorted_copy;
  }

  std::vector<BinState> state(static_cast<std::size_t>(n_hours) * kNumVariables);
  for (const auto& rec : records) {
    if (rec.offset_minutes < 0) continue;
    const int bin = rec.offset_minutes / policy.bin_minutes;
    if (bin >= n_hours) continue;
    auto& s = state[static_cast<std::size_t>(bin) * kNumVariables + index_of(rec.variable)];
    if (is_numerical(rec.variable)) {
      const auto v = detail::parse_double(rec.value);
      if (v && std::isfinite(*v)) {
        s.last_parsed = *v;
        s.sum += *v;
        ++s.count;
        s.last_entry_ok = true;
      } else {
        s.last_entry_ok = false;
      }
    } else {
      const auto text = detail::trim(rec.value);
      if (!text.empty()) {
        s.last_code = dict.intern(categorical_column(rec.variable), text);
        ++s.count;
        s.last_entry_ok = true;
      } else {
        s.last_entry_ok = false;
      }
    }
  }

  for (int h = 0; h < n_hours; ++h) {
    for (int v = 0; v < kNumVariables; ++v) {
      const auto& s = state[static_cast<std::size_t>(h) * kNumVariables + v];
      if (s.count == 0) continue;
      if (v < kNumNumerical) {
        const bool use_mean = policy.aggregator == Aggregator::mean_fallback && !s.last_entry_ok;
        grid.numeric(h, v) = use_mean ? s.sum / s.count : s.last_parsed;
        grid.observed_mask(h, v) = true;
      } else {
        grid.categorical(h, v - kNumNumerical) = s.last_code;
        grid.categorical_observed(h, v - kNumNumerical) = true;
      }
    }
  }
  return grid;
}

void impute(HourlyGrid& grid, const Schema& schema, const BinPolicy& policy) {
  for (int v = 0; v < kNumNumerical; ++v) {
    const double normal = schema.at(v).normal_value;
    std::optional<double> carried;
    for (int h = 0; h < grid.n_hours; ++h) {
      if (grid.observed_mask(h, v)) {
        carried = grid.numeric(h, v);
        continue;
      }
      const bool carry = policy.impute == ImputeMode::carry_forward_then_normal && carried;
      grid.numeric(h, v) = carry ? *carried : normal;
    }
  }
  for (int c = 0; c < kNumCategorical; ++c) {
    std::int32_t carried = 0;
    for (int h = 0; h < grid.n_hours; ++h) {
      if (grid.categorical_observed(h, c)) {
        carried = grid.categorical(h, c);
      } else {
        grid.categorical(h, c) = carried;
      }
    }
  }
}

bool is_complete(const HourlyGrid& grid, const CategoryDictionary& dict) {
  if (grid.numeric.rows() != grid.n_hours || grid.categorical.rows() != grid.n_hours) return false;
  if (!grid.numeric.allFinite()) return false;
  for (int h = 0; h < grid.n_hours; ++h) {
    for (int c = 0; c < kNumCategorical; ++c) {
      const auto code = grid.categorical(h, c);
      if (code < 0 || code >= dict.size(c)) return false;
    }
  }
  return true;
}

std::vector<int> Vocabularies::sizes() const {
  std::vector<int> out;
  for (int c = 0; c < kNumCategorical; ++c) out.push_back(size(c));
  return out;
}

Schema Vocabularies::apply(Schema schema) const {
  for (int c = 0; c < kNumCategorical; ++c) schema.at(kNumNumerical + c).vocab = values[c];
  return schema;
}

std::uint64_t Vocabularies::hash() const {
  std::uint64_t h = detail::fnv1a("vocab-v1");
  for (int c = 0; c < kNumCategorical; ++c) {
    h = detail::fnv1a(std::to_string(values[c].size()) + "#", h);
    for (const auto& v : values[c]) {
      h = detail::fnv1a(v, h);
      h = detail::fnv1a(std::string_view("\x1f", 1), h);
    }
  }
  return h;
}

Vocabularies build_vocabs(std::span<const HourlyGrid* const> grids, const CategoryDictionary& dict) {
  Vocabularies vocabs;
  for (int c = 0; c < kNumCategorical; ++c) {
    std::vector<char> seen(static_cast<std::size_t>(dict.size(c)), 0);
    for (const auto* g : grids) {
      for (int h = 0; h < g->n_hours; ++h) {
        if (g->categorical_observed(h, c)) seen.at(static_cast<std::size_t>(g->categorical(h, c))) = 1;
      }
    }
    std::set<std::string> distinct;
    for (int code = 1; code < dict.size(c); ++code) {
      if (seen[code]) distinct.insert(dict.value(c, code));
    }
    vocabs.values[c].assign(1, std::string(kUnknownCategory));
    vocabs.values[c].insert(vocabs.values[c].end(), distinct.begin(), distinct.end());
    vocabs.remap[c].assign(static_cast<std::size_t>(dict.size(c)), 0);
    for (int code = 1; code < dict.size(c); ++code) {
      if (!seen[code]) continue;
      const auto it = std::lower_bound(vocabs.values[c].begin() + 1, vocabs.values[c].end(), dict.value(c, code));
      vocabs.remap[c][code] = static_cast<std::int32_t>(it - vocabs.values[c].begin());
    }
  }
  return vocabs;
}

OversampleResult oversample(std::span<const int> labels, Rng& rng) {
  OversampleResult out;
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("oversample: labels must be 0/1");
    (labels[i] ? pos : neg).push_back(i);
    out.indices.push_back(i);
  }
  if (pos.empty() || neg.empty()) {
    out.single_class = true;
    return out;
  }
  const auto& minority = pos.size() < neg.size() ? pos : neg;
  const std::size_t deficit = std::max(pos.size(), neg.size()) - minority.size();
  for (std::size_t k = 0; k < deficit; ++k) out.indices.push_back(minority[rng.below(minority.size())]);
  return out;
}

std::vector<TaskInstance> oversample(const std::vector<TaskInstance>& instances, Rng& rng, bool* single_class) {
  std::vector<int> labels;
  labels.reserve(instances.size());
  for (const auto& inst : instances) {
    const auto* b = std::get_if<BinaryLabel>(&inst.label);
    if (!b) throw std::invalid_argument("oversample: only binary task instances can be oversampled");
    labels.push_back(b->value);
  }
  const auto r = oversample(labels, rng);
  if (single_class) *single_class = r.single_class;
  std::vector<TaskInstance> out;
  out.reserve(r.indices.size());
  for (auto i : r.indices) out.push_back(instances[i]);
  return out;
}

Standardizer Standardizer::identity() {
  Standardizer s;
  s.mean.fill(0.0);
  s.scale.fill(1.0);
  return s;
}

Standardizer Standardizer::fit(std::span<const HourlyGrid* const> grids) {
  Standardizer s = identity();
  std::array<double, kNumNumerical> sum{}, sumsq{};
  double n = 0;
  for (const auto* g : grids) {
    for (int h = 0; h < g->n_hours; ++h) {
      for (int v = 0; v < kNumNumerical; ++v) {
        sum[v] += g->numeric(h, v);
        sumsq[v] += g->numeric(h, v) * g->numeric(h, v);
      }
    }
    n += g->n_hours;
  }
  if (n < 2) return s;
  for (int v = 0; v < kNumNumerical; ++v) {
    s.mean[v] = sum[v] / n;
    const double var = std::max(0.0, sumsq[v] / n - s.mean[v] * s.mean[v]);
    s.scale[v] = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  return s;
}

namespace {

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("grid cache truncated");
  return v;
}

constexpr char kGridMagic[8] = {'I', 'C', 'U', 'G', 'R', 'I', 'D', '1'};

static_assert(std::endian::native == std::endian::little, "grid cache layout assumes a little-endian host");

}  // namespace

void write_grid_cache(const std::filesystem::path& path, std::uint64_t key, const std::vector<HourlyGrid>& grids,
                      const CategoryDictionary& dict) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write grid cache " + path.string());
  out.write(kGridMagic, sizeof(kGridMagic));
  put<std::uint64_t>(out, key);
  put<std::uint64_t>(out, grids.size());
  for (const auto& g : grids) {
    put<std::int64_t>(out, g.stay_id);
    put<std::int32_t>(out, g.n_hours);
    out.write(reinterpret_cast<const char*>(g.numeric.data()),
              static_cast<std::streamsize>(sizeof(double) * g.numeric.size()));
    out.write(reinterpret_cast<const char*>(g.categorical.data()),
              static_cast<std::streamsize>(sizeof(std::int32_t) * g.categorical.size()));
    for (Eigen::Index i = 0; i < g.observed_mask.size(); ++i) put<std::uint8_t>(out, g.observed_mask.data()[i]);
    for (Eigen::Index i = 0; i < g.categorical_observed.size(); ++i) {
      put<std::uint8_t>(out, g.categorical_observed.data()[i]);
    }
  }
  for (int c = 0; c < kNumCategorical; ++c) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dict.size(c)));
    for (int code = 0; code < dict.size(c); ++code) {
      const auto& s = dict.value(c, code);
      put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
      out.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
  }
  if (!out) throw DataError("failed writing grid cache " + path.string());
}

std::optional<GridCache> read_grid_cache(const std::filesystem::path& path, std::uint64_t key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kGridMagic, sizeof(magic)) != 0) throw DataError("not a grid cache: " + path.string());
  if (get<std::uint64_t>(in) != key) return std::nullopt;
  GridCache cache;
  const auto n = get<std::uint64_t>(in);
  cache.grids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto stay = get<std::int64_t>(in);
    const auto hours = get<std::int32_t>(in);
    if (hours < 0 || hours > 1'000'000) throw DataError("grid cache corrupt: bad n_hours");
    auto g = HourlyGrid::empty(stay, hours);
    in.read(reinterpret_cast<char*>(g.numeric.data()), static_cast<std::streamsize>(sizeof(double) * g.numeric.size()));
    in.read(reinterpret_cast<char*>(g.categorical.data()),
            static_cast<std::streamsize>(sizeof(std::int32_t) * g.categorical.size()));
    for (Eigen::Index k = 0; k < g.observed_mask.size(); ++k) g.observed_mask.data()[k] = get<std::uint8_t>(in) != 0;
    for (Eigen::Index k = 0; k < g.categorical_observed.size(); ++k) {
      g.categorical_observed.data()[k] = get<std::uint8_t>(in) != 0;
    }
    if (!in) throw DataError("grid cache truncated");
    cache.grids.push_back(std::move(g));
  }
  for (int c = 0; c < kNumCategorical; ++c) {
    const auto count = get<std::uint32_t>(in);
    for (std::uint32_t code = 0; code < count; ++code) {
      const auto len = get<std::uint32_t>(in);
      std::string s(len, '\0');
      in.read(s.data(), len);
      if (!in) throw DataError("grid cache truncated");
      if (code == 0) continue;  // "unknown" is pre-seeded
      cache.dict.intern(c, s);
    }
  }
  for (const auto& g : cache.grids) {
    if (!is_complete(g, cache.dict)) throw DataError("grid cache corrupt: invalid cell");
  }
  return cache;
}

std::uint64_t grid_cache_key(std::span<const std::filesystem::path> inputs, const BinPolicy& policy,
                             const Schema& schema) {
  std::uint64_t h = detail::fnv1a("grid-cache-v1");
  for (const auto& p : inputs) {
    h = detail::fnv1a(p.filename().string(), h);
    h = detail::fnv1a(detail::read_file(p), h);
  }
  h = detail::fnv1a(std::to_string(policy.bin_minutes) + ":" + std::to_string(static_cast<int>(policy.aggregator)) +
                        ":" + std::to_string(static_cast<int>(policy.impute)) + ":" + std::to_string(policy.max_hours),
                    h);
  for (const auto& spec : schema) h = detail::fnv1a(spec.name + "=" + detail::format_double(spec.normal_value), h);
  return h;
}

}  // namespace icubench
