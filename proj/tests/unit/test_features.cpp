#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "prognos/errors.hpp"
#include "prognos/features.hpp"

using namespace prognos;

namespace {

// Stats of signal s within a cycle feature vector.
std::array<double, kStatsPerSignal> stats_of(const std::array<double, kNumFeatures>& f,
                                             std::size_t s) {
  std::array<double, kStatsPerSignal> out{};
  std::copy_n(f.begin() + static_cast<std::ptrdiff_t>(s * kStatsPerSignal), kStatsPerSignal,
              out.begin());
  return out;
}

Sample sample_of(CycleRecord rec) {
  Sample s;
  s.label.rul = 100 - rec.cycle_number;
  s.record = std::move(rec);
  return s;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("schema has 129 names in signal-major order") {
  const auto& schema = feature_schema();
  REQUIRE(schema.size() == 129);
  CHECK(kNumFeatures == 129);
  CHECK(schema[0] == "alt_mean");
  CHECK(schema[1] == "alt_std");
  CHECK(schema[6] == "alt_max");
  CHECK(schema[7] == "Mach_mean");
  CHECK(schema[9 * 7 + 4] == "T48_median");
  CHECK(schema[125] == "P50_max");
  CHECK(schema[126] == "duration");
  CHECK(schema[127] == "cycle_number");
  CHECK(schema[128] == "flight_class");
  CHECK(std::set<std::string>(schema.begin(), schema.end()).size() == 129);
  CHECK(feature_schema_hash() == schema_hash_of(schema));
  CHECK(feature_schema_hash().size() == 16);
}

TEST_CASE("extraction yields 129 entries") {
  const auto f = extract_cycle_features(test::make_record(1, 4, 3, 1, 9));
  CHECK(f.size() == 129);
  CHECK(f[126] == 9.0);
  CHECK(f[127] == 4.0);
  CHECK(f[128] == 3.0);
  for (double v : f) CHECK(std::isfinite(v));
}

TEST_CASE("constant signal") {
  const auto rec = test::make_record(1, 1, 1, 1, 4, [](std::size_t, std::size_t) { return 7.25; });
  const auto st = stats_of(extract_cycle_features(rec), 0);
  CHECK(st == std::array<double, 7>{7.25, 0.0, 7.25, 7.25, 7.25, 7.25, 7.25});
}

TEST_CASE("signal [1,2,3,4]") {
  const auto rec = test::make_record(1, 1, 1, 1, 4, [](std::size_t, std::size_t t) {
    return static_cast<double>(t + 1);
  });
  const auto st = stats_of(extract_cycle_features(rec), 5);
  CHECK(st[0] == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(st[1] == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
  CHECK(st[1] == doctest::Approx(1.1180340).epsilon(1e-7));
  CHECK(st[2] == 1.0);
  CHECK(st[3] == doctest::Approx(1.75).epsilon(1e-15));
  CHECK(st[4] == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(st[5] == doctest::Approx(3.25).epsilon(1e-15));
  CHECK(st[6] == 4.0);
}

TEST_CASE("quantile interpolation") {
  const std::vector<double> one{3.0};
  CHECK(quantile_sorted(one, 0.25) == 3.0);
  const std::vector<double> five{1, 2, 4, 8, 16};
  CHECK(quantile_sorted(five, 0.0) == 1.0);
  CHECK(quantile_sorted(five, 0.25) == 2.0);
  CHECK(quantile_sorted(five, 0.5) == 4.0);
  CHECK(quantile_sorted(five, 0.6) == doctest::Approx(5.6));
  CHECK(quantile_sorted(five, 1.0) == 16.0);
}

TEST_CASE("single timestamp cycle") {
  const auto rec = test::make_record(1, 1, 2, 1, 1, [](std::size_t s, std::size_t) {
    return static_cast<double>(s);
  });
  const auto f = extract_cycle_features(rec);
  for (std::size_t s = 0; s < kNumSignals; ++s) {
    const auto st = stats_of(f, s);
    CHECK(st[1] == 0.0);
    CHECK(st[0] == static_cast<double>(s));
    CHECK(st[6] == static_cast<double>(s));
  }
  CHECK(f[126] == 1.0);
}

TEST_CASE("empty series is rejected") {
  CHECK_THROWS_AS(extract_cycle_features(test::make_record(1, 1, 1, 1, 0)), DataError);
}

TEST_CASE("features are invariant to timestamp order") {
  Rng rng(5);
  const auto rec = test::make_record(2, 3, 2, 0, 37, [&](std::size_t, std::size_t) {
    return rng.uniform(-50.0, 50.0);
  });
  auto shuffled = rec;
  std::vector<std::size_t> perm(rec.length());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    std::swap(perm[i], perm[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
  }
  for (std::size_t s = 0; s < kNumSignals; ++s)
    for (std::size_t t = 0; t < perm.size(); ++t) shuffled.series[s][t] = rec.series[s][perm[t]];
  const auto a = extract_cycle_features(rec);
  const auto b = extract_cycle_features(shuffled);
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    const std::size_t stat = j % kStatsPerSignal;
    if (j < 126 && (stat == 0 || stat == 1)) {
      CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-12));
    } else {
      CHECK(a[j] == b[j]);
    }
  }
}

TEST_CASE("five-number summary is ordered and std nonnegative") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto length = static_cast<std::size_t>(rng.uniform_int(1, 30));
    const auto rec = test::make_record(1, 1, 1, 1, length, [&](std::size_t, std::size_t) {
      return rng.uniform() < 0.3 ? 1.0 : rng.normal();
    });
    const auto f = extract_cycle_features(rec);
    for (std::size_t s = 0; s < kNumSignals; ++s) {
      const auto st = stats_of(f, s);
      CHECK(st[1] >= 0.0);
      CHECK(st[2] <= st[3]);
      CHECK(st[3] <= st[4]);
      CHECK(st[4] <= st[5]);
      CHECK(st[5] <= st[6]);
    }
  }
}

TEST_CASE("matrix rows follow input order") {
  std::vector<Sample> samples{sample_of(test::make_record(3, 2)), sample_of(test::make_record(1, 7)),
                              sample_of(test::make_record(2, 1))};
  const auto lf = extract_matrix(samples);
  REQUIRE(lf.features.values.rows() == 3);
  CHECK(lf.features.values.cols() == 129);
  CHECK(lf.features.row_keys == std::vector<RowKey>{{3, 2}, {1, 7}, {2, 1}});
  for (std::size_t i = 0; i < 3; ++i) {
    const auto f = extract_cycle_features(samples[i].record);
    CHECK(std::equal(f.begin(), f.end(), lf.features.values.row(i).begin()));
    CHECK(lf.labels[i] == samples[i].label);
  }
}

TEST_CASE("single cycle gives a 1x129 matrix") {
  std::vector<Sample> one{sample_of(test::make_record(1, 1))};
  const auto lf = extract_matrix(one);
  CHECK(lf.features.values.rows() == 1);
  CHECK(lf.features.values.cols() == 129);
}

TEST_CASE("matrix errors") {
  CHECK_THROWS_AS(extract_matrix(std::span<const Sample>{}), DataError);
  std::vector<Sample> bad{sample_of(test::make_record(4, 9))};
  bad[0].record.series[2].clear();
  try {
    extract_matrix(bad);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("unit 4") != std::string::npos);
    CHECK(msg.find("cycle 9") != std::string::npos);
  }
}

TEST_CASE("feature and label caches round trip exactly") {
  Rng rng(3);
  std::vector<Sample> samples;
  for (int c = 1; c <= 5; ++c) {
    samples.push_back(sample_of(test::make_record(1, c, 1 + c % 3, c < 3, 11, [&](std::size_t, std::size_t) {
      return rng.normal() * 1e3 + 1.0 / 3.0;
    })));
    samples.back().label.ef = failure_flags_for_subset("DS03");
    samples.back().label.hs = c < 3;
  }
  const auto lf = extract_matrix(samples);

  std::ostringstream fout;
  write_feature_cache(fout, lf.features);
  CHECK(fout.str().rfind("unit,cycle,alt_mean,alt_std,", 0) == 0);
  std::istringstream fin(fout.str());
  const FeatureMatrix back = read_feature_cache(fin);
  CHECK(back.values == lf.features.values);
  CHECK(back.row_keys == lf.features.row_keys);

  std::ostringstream lout;
  write_label_cache(lout, lf.features.row_keys, lf.labels);
  CHECK(lout.str().rfind("unit,cycle,hs,fan,lpc,hpc,hpt,lpt,rul\n", 0) == 0);
  std::istringstream lin(lout.str());
  std::vector<RowKey> keys;
  CHECK(read_label_cache(lin, &keys) == lf.labels);
  CHECK(keys == lf.features.row_keys);
}

TEST_CASE("cache with a foreign schema is rejected") {
  std::istringstream in("unit,cycle,a,b\n1,1,0,0\n");
  CHECK_THROWS_AS(read_feature_cache(in), DataError);
}

}
