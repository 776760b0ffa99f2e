#include <doctest.h>

#include "zonecast/error.hpp"
#include "zonecast/features.hpp"

#include <random>

using namespace zonecast;
using namespace zonecast::features;
using MK = MeasurementKind;

namespace {

ZoneFrame frame_of(std::vector<double> target, ZoneFrame::Channels extra = {}, Timestamp start = {0},
                   std::int64_t step = 900) {
  extra[MK::zone_air_temperature_sensor] = std::move(target);
  return ZoneFrame("zone_1", step, start, std::move(extra));
}

ForecastConfig cfg_of(int L, std::vector<MK> exog = {}) {
  ForecastConfig c;
  c.lookback_steps = L;
  c.horizon_steps = 1;
  c.exogenous = std::move(exog);
  return c;
}

}  // namespace

TEST_CASE("build_design: lag enumeration") {
  const auto d = build_design(frame_of({1, 2, 3, 4}), cfg_of(2));
  CHECK(d.X == Matrix(2, 2, {1, 2, 2, 3}));
  CHECK(d.y == std::vector<double>{3, 4});
  CHECK(d.sample_timestamps == std::vector<Timestamp>{{1800}, {2700}});
  CHECK(d.feature_names ==
        std::vector<std::string>{"zone_air_temperature_sensor_lag2", "zone_air_temperature_sensor_lag1"});
}

TEST_CASE("build_design: constant exogenous channel") {
  const auto d = build_design(frame_of({5, 6, 7}, {{MK::outside_air_temperature_sensor, {0, 0, 0}}}),
                              cfg_of(1, {MK::outside_air_temperature_sensor}));
  REQUIRE(d.X.cols() == 3);
  CHECK(d.X == Matrix(2, 3, {5, 0, 0, 6, 0, 0}));
}

TEST_CASE("build_design: current-step exogenous value comes last") {
  const auto d = build_design(frame_of({0, 0, 0}, {{MK::zone_air_cooling_setpoint, {10, 11, 12}}}),
                              cfg_of(2, {MK::zone_air_cooling_setpoint}));
  CHECK(d.X == Matrix(1, 5, {0, 0, 10, 11, 12}));
  CHECK(d.feature_names.back() == "zone_air_cooling_setpoint_lag0");
}

TEST_CASE("build_design: too short or missing channel") {
  CHECK_THROWS_WITH_AS(build_design(frame_of({1, 2}), cfg_of(2)), doctest::Contains("at least 3"), ValidationError);
  CHECK_THROWS_WITH_AS(build_design(frame_of({1, 2, 3}), cfg_of(1, {MK::zone_air_heating_setpoint})),
                       doctest::Contains("zone_air_heating_setpoint"), ValidationError);
}

TEST_CASE("feature count formula over a sweep") {
  std::mt19937_64 gen(3);
  const auto all = ForecastConfig::default_exogenous(true);
  for (int L = 1; L <= 12; ++L) {
    for (std::size_t ne = 0; ne <= all.size(); ++ne) {
      ForecastConfig c = cfg_of(L, std::vector<MK>(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(ne)));
      ZoneFrame::Channels ch;
      for (MK e : c.exogenous) {
        std::vector<double> v(30);
        for (double& x : v) x = static_cast<double>(gen() % 100);
        ch[e] = v;
      }
      std::vector<double> target(30, 70.0);
      const auto d = build_design(frame_of(target, ch), c);
      CHECK(d.X.cols() == static_cast<std::size_t>(L) * (1 + ne) + ne);
      CHECK(d.feature_names.size() == d.X.cols());
      CHECK(d.n_samples() == 30 - static_cast<std::size_t>(L));
    }
  }
}

TEST_CASE("build_design is translation-consistent") {
  std::mt19937_64 gen(4);
  std::vector<double> y(40), e(40);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = static_cast<double>(gen() % 1000) / 10.0;
    e[i] = static_cast<double>(gen() % 1000) / 10.0;
  }
  const ForecastConfig c = cfg_of(3, {MK::outside_air_temperature_sensor});
  const auto a = build_design(frame_of(y, {{MK::outside_air_temperature_sensor, e}}, {0}), c);
  for (std::int64_t k : {1, 5, 96}) {
    const auto b = build_design(frame_of(y, {{MK::outside_air_temperature_sensor, e}}, {900 * k}), c);
    CHECK(a.X == b.X);
    CHECK(a.y == b.y);
    CHECK(a.feature_names == b.feature_names);
    for (std::size_t i = 0; i < a.n_samples(); ++i) {
      CHECK(b.sample_timestamps[i].epoch_seconds == a.sample_timestamps[i].epoch_seconds + 900 * k);
    }
  }
}

TEST_CASE("defaults") {
  const auto c = ForecastConfig::defaults(900);
  CHECK(c.lookback_steps == 672);
  CHECK(c.horizon_steps == 1344);
  CHECK(ForecastConfig::defaults(3600).lookback_steps == 168);
  CHECK(c.exogenous.size() == 4);
  CHECK(ForecastConfig::default_exogenous(true).back() == MK::supply_air_pressure_setpoint);
}

TEST_CASE("calendar_split") {
  const auto whole = [](Timestamp start, std::size_t rows) {
    return frame_of(std::vector<double>(rows, 70.0), {}, start, 3600);
  };
  SUBCASE("March 2022 -> train") {
    const std::vector<ZoneFrame> f{whole(make_utc(2022, 3, 1), 48)};
    const auto s = calendar_split(f);
    CHECK(s.train.size() == 1);
    CHECK(s.val.empty());
    CHECK(s.test.empty());
  }
  SUBCASE("October 2023 -> val") {
    const std::vector<ZoneFrame> f{whole(make_utc(2023, 10, 1), 48)};
    CHECK(calendar_split(f).val.size() == 1);
  }
  SUBCASE("February 2024 -> test") {
    const std::vector<ZoneFrame> f{whole(make_utc(2024, 2, 1), 48)};
    CHECK(calendar_split(f).test.size() == 1);
  }
  SUBCASE("a frame across Jul 1 is cut; the cut row goes to val") {
    const std::vector<ZoneFrame> f{whole(make_utc(2022, 6, 30), 48)};
    const auto s = calendar_split(f);
    REQUIRE(s.train.size() == 1);
    REQUIRE(s.val.size() == 1);
    CHECK(s.train[0].n_rows() == 24);
    CHECK(s.val[0].start() == make_utc(2022, 7, 1));
    // No leakage within the year.
    CHECK(s.train[0].time_at(s.train[0].n_rows() - 1) < s.val[0].start());
  }
  SUBCASE("off-grid phase relative to the cut") {
    const std::vector<ZoneFrame> f{
        frame_of(std::vector<double>(10, 1.0), {}, {make_utc(2022, 6, 30, 23).epoch_seconds + 300}, 900)};
    const auto s = calendar_split(f);
    REQUIRE(s.train.size() == 1);
    CHECK(s.train[0].n_rows() == 4);  // 23:05, 23:20, 23:35, 23:50
    CHECK(s.val[0].n_rows() == 6);
  }
}

TEST_CASE("segment_frames splits at gaps") {
  const auto t = TimeSeries("v", MK::zone_air_temperature_sensor, 900, {0}, {1, 2, kMissing, 4, 5, 6, 7});
  const auto o = TimeSeries("w", MK::outside_air_temperature_sensor, 900, {900}, {2, 3, 4, kMissing, 6, 7, 8});
  const std::vector<TimeSeries> s{t, o};
  const auto f = segment_frames(s, "z", 2);
  // Common range rows t=900..5400 (6 rows); t[2] and o[3] missing at 1800 and 3600.
  REQUIRE(f.size() == 1);
  CHECK(f[0].start() == Timestamp{4500});
  CHECK(f[0].n_rows() == 2);
  CHECK(f[0].column(MK::outside_air_temperature_sensor)[0] == 6);
  CHECK(segment_frames(s, "z", 1).size() == 3);
}

TEST_CASE("design CSV export") {
  const auto d = build_design(frame_of({1, 2.5, 3}), cfg_of(1));
  CHECK(format_design_csv(d) ==
        "zone_air_temperature_sensor_lag1,target,timestamp\n"
        "1,2.5,1970-01-01T00:15:00Z\n"
        "2.5,3,1970-01-01T00:30:00Z\n");
}
