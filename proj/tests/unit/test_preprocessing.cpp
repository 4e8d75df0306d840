#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "icubench/errors.hpp"
#include "icubench/preprocessing.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace icubench;

namespace {

StayRecordRaw rec(Var v, int offset, std::string value) { return {1, v, offset, std::move(value)}; }

/// Random record set over a few variables, with garbage values, blanks,
/// negative offsets and offsets past the end.
std::vector<StayRecordRaw> random_records(Rng& rng, int n_hours) {
  static const Var vars[] = {Var::HeartRate, Var::Glucose, Var::PH, Var::Gender, Var::GcsTotal, Var::GcsEyes};
  static const char* cats[] = {"Male", "Female", " 15 ", "3", ""};
  static const char* junk[] = {"err", "", "--", "12abc", "nan", "inf", " 85 ", "+7.5"};
  std::vector<StayRecordRaw> out;
  const int n = static_cast<int>(rng.below(40));
  for (int i = 0; i < n; ++i) {
    const Var v = vars[rng.below(6)];
    const int offset = static_cast<int>(rng.integer(-30, n_hours * 60 + 30));
    std::string value;
    if (!is_numerical(v)) {
      value = cats[rng.below(5)];
    } else if (rng.bernoulli(0.25)) {
      value = junk[rng.below(8)];
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", rng.uniform(0, 200));
      value = buf;
    }
    out.push_back({1, v, offset, value});
  }
  std::sort(out.begin(), out.end(),
            [](const StayRecordRaw& a, const StayRecordRaw& b) { return a.offset_minutes < b.offset_minutes; });
  return out;
}

/// Compares bin_hourly with the reference; returns the number of cell mismatches.
int compare_with_reference(const std::vector<StayRecordRaw>& records, int n_hours, Aggregator agg) {
  CategoryDictionary dict;
  BinPolicy policy;
  policy.aggregator = agg;
  const auto grid = bin_hourly(records, 1, n_hours, dict, policy);
  std::vector<oracle::RawRecord> raw;
  for (const auto& r : records) raw.push_back({index_of(r.variable), r.offset_minutes, r.value});
  const auto ref =
      oracle::bin_reference(raw, n_hours, kNumNumerical, kNumVariables, agg == Aggregator::mean_fallback);
  int mismatches = 0;
  for (int h = 0; h < n_hours; ++h) {
    for (int v = 0; v < kNumVariables; ++v) {
      const auto& cell = ref[h][v];
      if (v < kNumNumerical) {
        if (grid.observed_mask(h, v) != cell.observed) {
          ++mismatches;
        } else if (cell.observed && std::abs(grid.numeric(h, v) - cell.number) > 1e-12) {
          ++mismatches;
        }
      } else {
        const int c = v - kNumNumerical;
        if (grid.categorical_observed(h, c) != cell.observed) {
          ++mismatches;
        } else if (cell.observed && dict.value(c, grid.categorical(h, c)) != cell.text) {
          ++mismatches;
        }
      }
    }
  }
  return mismatches;
}

}  // namespace

TEST_SUITE("preprocessing") {
  TEST_CASE("last parseable value wins, mean when the last entry is garbage") {
    CategoryDictionary dict;
    std::vector<StayRecordRaw> r = {rec(Var::HeartRate, 10, "80"), rec(Var::HeartRate, 50, "90")};
    auto g = bin_hourly(r, 1, 4, dict);
    CHECK(g.numeric(0, index_of(Var::HeartRate)) == 90.0);

    r = {rec(Var::HeartRate, 5, "80"), rec(Var::HeartRate, 20, "err")};
    g = bin_hourly(r, 1, 4, dict);
    CHECK(g.numeric(0, 0) == 80.0);
    r = {rec(Var::HeartRate, 5, "80"), rec(Var::HeartRate, 10, "100"), rec(Var::HeartRate, 20, "err")};
    g = bin_hourly(r, 1, 4, dict);
    CHECK(g.numeric(0, 0) == 90.0);
    BinPolicy last;
    last.aggregator = Aggregator::last_valid;
    g = bin_hourly(r, 1, 4, dict, last);
    CHECK(g.numeric(0, 0) == 100.0);

    r = {rec(Var::HeartRate, 5, "0x10"), rec(Var::HeartRate, 6, "inf")};
    g = bin_hourly(r, 1, 4, dict);
    CHECK_FALSE(g.observed_mask(0, 0));

    r = {rec(Var::HeartRate, 130, "err")};
    g = bin_hourly(r, 1, 4, dict);
    CHECK_FALSE(g.observed_mask(2, 0));
    CHECK_FALSE(g.observed_mask(3, 0));
  }

  TEST_CASE("negative and late offsets are dropped, unsorted input is sorted") {
    CategoryDictionary dict;
    std::vector<StayRecordRaw> r = {rec(Var::HeartRate, 70, "95"), rec(Var::HeartRate, -5, "70"),
                                    rec(Var::HeartRate, 65, "85"), rec(Var::HeartRate, 300, "60")};
    const auto g = bin_hourly(r, 1, 3, dict);
    CHECK_FALSE(g.observed_mask(0, 0));
    CHECK(g.numeric(1, 0) == 95.0);
    CHECK_FALSE(g.observed_mask(2, 0));
  }

  TEST_CASE("binning matches the reference on random record sets") {
    Rng rng(42);
    int mismatches = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const int n_hours = 1 + static_cast<int>(rng.below(6));
      const auto records = random_records(rng, n_hours);
      mismatches += compare_with_reference(records, n_hours, Aggregator::mean_fallback);
      mismatches += compare_with_reference(records, n_hours, Aggregator::last_valid);
    }
    CHECK(mismatches == 0);
  }

  TEST_CASE("permuting records across bins never changes a cell") {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
      auto records = random_records(rng, 5);
      CategoryDictionary d1, d2;
      const auto a = bin_hourly(records, 1, 5, d1);
      // reverse the order of bins while keeping each bin's internal order
      std::stable_sort(records.begin(), records.end(), [](const auto& x, const auto& y) {
        return x.offset_minutes / 60 > y.offset_minutes / 60;
      });
      const auto b = bin_hourly(records, 1, 5, d2);
      CHECK(a.observed_mask == b.observed_mask);
      for (int h = 0; h < 5; ++h) {
        for (int v = 0; v < kNumNumerical; ++v) {
          if (a.observed_mask(h, v)) CHECK(a.numeric(h, v) == b.numeric(h, v));
        }
        for (int c = 0; c < kNumCategorical; ++c) {
          if (a.categorical_observed(h, c)) CHECK(d1.value(c, a.categorical(h, c)) == d2.value(c, b.categorical(h, c)));
        }
      }
    }
  }

  TEST_CASE("imputation carries forward, then falls back to normal values") {
    CategoryDictionary dict;
    std::vector<StayRecordRaw> r = {rec(Var::Gender, 0, "Female"), rec(Var::HeartRate, 10, "80"),
                                    rec(Var::HeartRate, 190, "90"), rec(Var::Glucose, 130, "140")};
    auto g = bin_hourly(r, 1, 6, dict);
    const auto mask_before = g.observed_mask;
    const auto schema = canonical_schema();
    impute(g, schema);
    CHECK(g.observed_mask == mask_before);
    CHECK(g.numeric(1, 0) == 80.0);
    CHECK(g.numeric(2, 0) == 80.0);
    CHECK(g.numeric(4, 0) == 90.0);
    CHECK(g.numeric(5, 0) == 90.0);
    const int glucose = index_of(Var::Glucose);
    CHECK(g.numeric(0, glucose) == schema[glucose].normal_value);
    CHECK(g.numeric(3, glucose) == 140.0);
    for (int h = 0; h < 6; ++h) CHECK(g.numeric(h, index_of(Var::Temperature)) == 37.0);
    const int gender = categorical_column(Var::Gender);
    for (int h = 0; h < 6; ++h) CHECK(dict.value(gender, g.categorical(h, gender)) == "Female");
    for (int h = 0; h < 6; ++h) CHECK(g.categorical(h, categorical_column(Var::Ethnicity)) == 0);
    CHECK(is_complete(g, dict));

    auto g2 = bin_hourly(r, 1, 6, dict);
    BinPolicy normal_only;
    normal_only.impute = ImputeMode::normal_only;
    impute(g2, schema, normal_only);
    CHECK(g2.numeric(2, 0) == schema[0].normal_value);
    CHECK(g2.numeric(3, 0) == 90.0);
    CHECK(g2.numeric(4, 0) == schema[0].normal_value);
  }

  TEST_CASE("unimputed grids are incomplete") {
    CategoryDictionary dict;
    std::vector<StayRecordRaw> r = {rec(Var::HeartRate, 10, "80")};
    auto g = bin_hourly(r, 1, 3, dict);
    CHECK_FALSE(is_complete(g, dict));
    CHECK(std::isnan(g.numeric(1, 0)));
    CHECK(g.categorical(0, 0) == kMissingCode);
    impute(g, canonical_schema());
    CHECK(is_complete(g, dict));
  }

  TEST_CASE("static records skip empty cells") {
    StayMeta m;
    m.stay_id = 3;
    m.age = 64;
    m.gender = "Male";
    m.height_cm = 180.5;
    const auto recs = static_records(m);
    REQUIRE(recs.size() == 3);
    for (const auto& r : recs) CHECK(r.offset_minutes == 0);
    CHECK(recs[0].variable == Var::Age);
    CHECK(recs[0].value == "64");
  }

  TEST_CASE("vocabularies are sorted with unknown first") {
    CategoryDictionary dict;
    std::vector<StayRecordRaw> r1 = {rec(Var::Gender, 0, "M"), rec(Var::Gender, 70, "F")};
    std::vector<StayRecordRaw> r2;
    for (int v = 3; v <= 15; ++v) r2.push_back(rec(Var::GcsTotal, v * 60, std::to_string(v)));
    std::vector<StayRecordRaw> r3 = {rec(Var::Ethnicity, 0, "Only in test")};
    const auto g1 = bin_hourly(r1, 1, 2, dict);
    const auto g2 = bin_hourly(r2, 2, 16, dict);
    const auto g3 = bin_hourly(r3, 3, 2, dict);
    const HourlyGrid* train[] = {&g1, &g2};
    const auto vocabs = build_vocabs(train, dict);
    const int gender = categorical_column(Var::Gender);
    CHECK(vocabs.values[gender] == std::vector<std::string>{"unknown", "F", "M"});
    CHECK(vocabs.size(categorical_column(Var::GcsTotal)) == 14);
    const int eth = categorical_column(Var::Ethnicity);
    CHECK(vocabs.size(eth) == 1);
    CHECK(vocabs.index(eth, g3.categorical(0, eth)) == 0);
    CHECK(vocabs.index(gender, *dict.find(gender, "M")) == 2);
    CHECK(vocabs.sizes().size() == kNumCategorical);
    const auto schema = vocabs.apply(canonical_schema());
    CHECK(schema[kNumNumerical + gender].vocab == vocabs.values[gender]);

    const HourlyGrid* all[] = {&g1, &g2, &g3};
    CHECK(build_vocabs(all, dict).hash() != vocabs.hash());
    const HourlyGrid* reordered[] = {&g2, &g1};
    CHECK(build_vocabs(reordered, dict).hash() == vocabs.hash());
  }

  TEST_CASE("oversampling duplicates the minority class") {
    Rng rng(1);
    std::vector<int> labels = {0, 0, 0, 1};
    auto r = oversample(labels, rng);
    REQUIRE(r.indices.size() == 6);
    for (std::size_t i = 0; i < 4; ++i) CHECK(r.indices[i] == i);
    CHECK(r.indices[4] == 3);
    CHECK(r.indices[5] == 3);

    labels = {0, 1, 1, 0};
    r = oversample(labels, rng);
    CHECK(r.indices == std::vector<std::size_t>{0, 1, 2, 3});

    labels = {1, 1};
    r = oversample(labels, rng);
    CHECK(r.single_class);
    CHECK(r.indices.size() == 2);

    labels = {0, 2};
    CHECK_THROWS_AS(oversample(labels, rng), std::invalid_argument);
  }

  TEST_CASE("oversampling 1000/100 is exact and reproducible") {
    std::vector<int> labels(1100, 0);
    for (int i = 0; i < 100; ++i) labels[i * 11] = 1;
    Rng a(77), b(77);
    const auto ra = oversample(labels, a);
    const auto rb = oversample(labels, b);
    CHECK(ra.indices == rb.indices);
    int pos = 0, neg = 0;
    for (auto i : ra.indices) (labels[i] ? pos : neg) += 1;
    CHECK(pos == 1000);
    CHECK(neg == 1000);
    std::vector<std::size_t> originals(ra.indices.begin(), ra.indices.begin() + 1100);
    for (std::size_t i = 0; i < 1100; ++i) CHECK(originals[i] == i);
  }

  TEST_CASE("instance oversampling keeps every original") {
    std::vector<TaskInstance> inst;
    for (int i = 0; i < 10; ++i) inst.push_back({i, {0, 24}, BinaryLabel{i < 2 ? 1 : 0}, Task::mortality});
    Rng rng(3);
    bool single = true;
    const auto out = oversample(inst, rng, &single);
    CHECK_FALSE(single);
    REQUIRE(out.size() == 16);
    for (int i = 0; i < 10; ++i) CHECK(out[i] == inst[i]);
    for (std::size_t i = 10; i < out.size(); ++i) CHECK(std::get<BinaryLabel>(out[i].label).value == 1);
  }

  TEST_CASE("standardizer uses training statistics") {
    auto g = HourlyGrid::empty(1, 4);
    for (int h = 0; h < 4; ++h) {
      for (int v = 0; v < kNumNumerical; ++v) g.numeric(h, v) = v == 0 ? 2.0 * h : 5.0;
    }
    const HourlyGrid* grids[] = {&g};
    const auto s = Standardizer::fit(grids);
    CHECK(s.mean[0] == doctest::Approx(3.0));
    CHECK(s.apply(0, 3.0) == doctest::Approx(0.0));
    CHECK(std::isfinite(s.apply(1, 5.0)));
    CHECK(s.apply(1, 5.0) == 0.0);
    const auto id = Standardizer::identity();
    CHECK(id.apply(4, 12.5) == 12.5);
  }

  TEST_CASE("grid cache round-trips and rejects other keys and corruption") {
    CategoryDictionary dict;
    std::vector<StayRecordRaw> r = {rec(Var::Gender, 0, "Female"), rec(Var::HeartRate, 10, "80")};
    std::vector<HourlyGrid> grids = {bin_hourly(r, 1, 3, dict), bin_hourly(r, 2, 2, dict)};
    for (auto& g : grids) impute(g, canonical_schema());
    testing::TempDir dir;
    const auto path = dir / "grids.bin";
    write_grid_cache(path, 99, grids, dict);
    const auto cache = read_grid_cache(path, 99);
    REQUIRE(cache);
    REQUIRE(cache->grids.size() == 2);
    CHECK(cache->grids[0].numeric == grids[0].numeric);
    CHECK(cache->grids[0].categorical == grids[0].categorical);
    CHECK(cache->grids[0].observed_mask == grids[0].observed_mask);
    CHECK(cache->grids[1].stay_id == 2);
    CHECK(cache->dict.value(categorical_column(Var::Gender), 1) == "Female");
    CHECK_FALSE(read_grid_cache(path, 100));
    CHECK_FALSE(read_grid_cache(dir / "absent.bin", 99));
    auto bytes = testing::read_file(path);
    testing::write_file(path, bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(read_grid_cache(path, 99), DataError);

    testing::write_file(dir / "a.csv", "x\n1\n");
    const std::filesystem::path inputs[] = {dir / "a.csv"};
    const auto k1 = grid_cache_key(inputs, BinPolicy{}, canonical_schema());
    BinPolicy other;
    other.aggregator = Aggregator::last_valid;
    CHECK(grid_cache_key(inputs, other, canonical_schema()) != k1);
    testing::write_file(dir / "a.csv", "x\n2\n");
    CHECK(grid_cache_key(inputs, BinPolicy{}, canonical_schema()) != k1);
  }
}
