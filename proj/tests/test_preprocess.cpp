#include <doctest.h>

#include "zonecast/error.hpp"
#include "zonecast/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace zonecast;
using namespace zonecast::preprocess;
using MK = MeasurementKind;

namespace {

TimeSeries zone_temp(std::vector<double> v, std::int64_t step = 300) {
  return TimeSeries("vav_1", MK::zone_air_temperature_sensor, step, Timestamp{0}, std::move(v));
}

// Independent oracle: full sort per window.
double sorted_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

bool same_values(const TimeSeries& a, const TimeSeries& b) { return a == b; }

}  // namespace

TEST_CASE("remove_outliers: bound check") {
  PreprocessConfig cfg;
  cfg.bounds[MK::zone_air_temperature_sensor] = {40.0, 100.0};
  const auto [out, rep] = remove_outliers(zone_temp({70, 200, 70}), cfg);
  CHECK(is_missing(out.values()[1]));
  CHECK(rep.bound_count == 1);
  CHECK(rep.mad_count == 0);
}

TEST_CASE("remove_outliers: constant series untouched") {
  PreprocessConfig cfg;
  const auto [out, rep] = remove_outliers(zone_temp(std::vector<double>(300, 70.0)), cfg);
  CHECK(out.missing_count() == 0);
  CHECK(rep.mad_count == 0);
}

TEST_CASE("remove_outliers: rolling median/MAD flags a spike") {
  PreprocessConfig cfg;
  cfg.mad_window = 5;
  cfg.mad_k = 6.0;
  const std::vector<double> v{70, 70, 70, 95, 70, 70, 70, 70};
  // Hand computation for index 3: window {70,70,95,70,70}, median 70,
  // deviations {0,0,25,0,0}, MAD 0 -> floor 1e-6; |95-70| = 25 > 6e-6.
  std::vector<double> win{70, 70, 95, 70, 70};
  const double med = sorted_median(win);
  for (double& x : win) x = std::fabs(x - med);
  const double mad = std::max(sorted_median(win), kMadFloor);
  REQUIRE(std::fabs(95 - med) > cfg.mad_k * mad);

  const auto [out, rep] = remove_outliers(zone_temp(v), cfg);
  CHECK(is_missing(out.values()[3]));
  CHECK(rep.mad_count == 1);
  CHECK(out.missing_count() == 1);
}

TEST_CASE("remove_outliers: only temperature sensors get the MAD pass by default") {
  PreprocessConfig cfg;
  cfg.mad_window = 5;
  const TimeSeries sp("vav_1", MK::zone_air_cooling_setpoint, 300, Timestamp{0}, {74, 74, 78, 74, 74});
  CHECK(remove_outliers(sp, cfg).first.missing_count() == 0);
  cfg.mad_kinds.insert(MK::zone_air_cooling_setpoint);
  CHECK(remove_outliers(sp, cfg).first.missing_count() == 1);
  const TimeSeries flow("vav_1", MK::supply_air_flowrate_sensor, 300, Timestamp{0}, {0.1, 0.1, 0.5, 0.1, 0.1});
  CHECK(remove_outliers(flow, PreprocessConfig{.mad_window = 5}).first.missing_count() == 0);
}

TEST_CASE("remove_outliers is idempotent") {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> noise(0.0, 0.3);
  PreprocessConfig cfg;
  cfg.mad_window = 11;
  cfg.mad_k = 3.0;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> v(400);
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = 70 + 3 * std::sin(static_cast<double>(i) / 20.0) + noise(gen);
      if (gen() % 25 == 0) v[i] += 15;
      if (gen() % 40 == 0) v[i] = kMissing;
      if (gen() % 90 == 0) v[i] = 500;
    }
    const auto once = remove_outliers(zone_temp(v), cfg).first;
    const auto [twice, rep2] = remove_outliers(once, cfg);
    CHECK(same_values(once, twice));
    CHECK(rep2.bound_count == 0);
    CHECK(rep2.mad_count == 0);
  }
}

TEST_CASE("impute") {
  PreprocessConfig cfg;
  SUBCASE("linear midpoint") {
    const auto out = impute(zone_temp({1, kMissing, 3}), cfg);
    CHECK(out.values()[1] == 2.0);
  }
  SUBCASE("gap longer than max_gap_steps is left alone") {
    std::vector<double> v(9, kMissing);
    v.front() = 1;
    v.back() = 9;  // 7 missing in between
    const auto out = impute(zone_temp(v), cfg);
    CHECK(out.missing_count() == 7);
  }
  SUBCASE("edge fill") {
    const auto out = impute(zone_temp({kMissing, 5, 6, kMissing}), cfg);
    CHECK(out.values()[0] == 5.0);
    CHECK(out.values()[3] == 6.0);
  }
  SUBCASE("all missing") {
    CHECK_THROWS_AS(impute(zone_temp({kMissing, kMissing}), cfg), ValidationError);
  }
  SUBCASE("properties on random gap patterns") {
    std::mt19937_64 gen(13);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> v(120);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(gen() % 1000) / 10.0;
      std::size_t i = 0;
      while (i < v.size()) {
        if (gen() % 6 == 0) {
          const std::size_t len = 1 + gen() % 10;
          for (std::size_t k = i; k < std::min(v.size(), i + len); ++k) v[k] = kMissing;
          i += len;
        }
        ++i;
      }
      if (std::all_of(v.begin(), v.end(), is_missing)) continue;
      const auto out = impute(zone_temp(v), cfg);
      // Present values never change.
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (!is_missing(v[k])) CHECK(out.values()[k] == v[k]);
      }
      // No remaining gap is short enough to have been filled.
      std::size_t k = 0;
      const auto o = out.values();
      while (k < o.size()) {
        if (!is_missing(o[k])) {
          ++k;
          continue;
        }
        std::size_t j = k;
        while (j < o.size() && is_missing(o[j])) ++j;
        CHECK(j - k > static_cast<std::size_t>(cfg.max_gap_steps));
        k = j;
      }
    }
  }
}

TEST_CASE("downsample") {
  PreprocessConfig cfg;
  SUBCASE("12 values to one hour") {
    cfg.target_step_seconds = 3600;
    std::vector<double> v(12);
    double sum = 0;
    for (std::size_t i = 0; i < v.size(); ++i) sum += (v[i] = 60.0 + static_cast<double>(i));
    const auto out = downsample(zone_temp(v), cfg);
    REQUIRE(out.size() == 1);
    CHECK(out.values()[0] == sum / 12.0);
  }
  SUBCASE("constant at 15 min") {
    const auto out = downsample(zone_temp(std::vector<double>(30, 71.0)), cfg);
    CHECK(out.size() == 10);
    for (double x : out.values()) CHECK(x == 71.0);
  }
  SUBCASE("target not a multiple") {
    cfg.target_step_seconds = 1000;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    CHECK_THROWS_AS(downsample(zone_temp({1, 2, 3}), cfg), ValidationError);
  }
  SUBCASE("non-5-minute input") {
    CHECK_THROWS_AS(downsample(zone_temp({1, 2, 3}, 900), cfg), ValidationError);
  }
}

TEST_CASE("clean runs the fixed pipeline and reports counts") {
  PreprocessConfig cfg;
  std::vector<double> v(24, 70.0);
  v[3] = kMissing;
  v[10] = 300.0;
  const auto c = clean(zone_temp(v), cfg);
  CHECK(c.report.bound_count == 1);
  CHECK(c.report.imputed_count == 2);
  CHECK(c.series.step_seconds() == 900);
  CHECK(c.series.missing_count() == 0);
  const std::vector<OutlierReport> rows{c.report};
  CHECK(format_outlier_report(rows) ==
        "device_id,kind,bound_count,mad_count,imputed_count\nvav_1,zone_air_temperature_sensor,1,0,2\n");
}
