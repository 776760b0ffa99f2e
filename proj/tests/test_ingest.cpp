#include <doctest.h>

#include "zonecast/error.hpp"
#include "zonecast/ingest.hpp"

#include <filesystem>
#include <random>

using namespace zonecast;
using namespace zonecast::ingest;
using MK = MeasurementKind;

namespace {

std::string telemetry(std::initializer_list<const char*> rows) {
  std::string out(kTelemetryHeader);
  out += '\n';
  for (const char* r : rows) {
    out += r;
    out += '\n';
  }
  return out;
}

RawRecord rec(std::int64_t t, double v, const char* dev = "vav_1", MK k = MK::zone_air_temperature_sensor) {
  return RawRecord{Timestamp{t}, dev, k, v};
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("zonecast_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("parse_long_csv maps fields directly") {
  const auto r = parse_long_csv_text(telemetry({"2022-01-01T00:00:00Z,vav_1,zone_air_temperature_sensor,70.5"}));
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].timestamp.epoch_seconds == 1640995200);
  CHECK(r.records[0].device_id == "vav_1");
  CHECK(r.records[0].kind == MK::zone_air_temperature_sensor);
  CHECK(r.records[0].value == 70.5);
}

TEST_CASE("parse_long_csv skips out-of-scope channels and records line errors") {
  std::string text = telemetry({"2022-01-01T00:00:00Z,vav_1,zone_air_co2_sensor,400"});
  for (int i = 0; i < 20; ++i) text += "2022-01-01T00:05:00Z,vav_1,zone_air_temperature_sensor,70\n";
  text += "2022-01-01T00:10:00Z,vav_1,zone_air_temperature_sensor,abc\n";
  const auto r = parse_long_csv_text(text);
  CHECK(r.skipped_unknown == 1);
  CHECK(r.skipped_by_name.at("zone_air_co2_sensor") == 1);
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].line == 23);
  CHECK(r.records.size() == 20);
}

TEST_CASE("parse_long_csv fails hard above 10% malformed rows") {
  std::string text(kTelemetryHeader);
  text += '\n';
  for (int i = 0; i < 9; ++i) text += "2022-01-01T00:00:00Z,vav_1,zone_air_temperature_sensor,70\n";
  text += "not-a-time,vav_1,zone_air_temperature_sensor,70\n";
  CHECK_NOTHROW(parse_long_csv_text(text));  // exactly 10%
  text += "2022-01-01T00:00:00Z,vav_1,zone_air_temperature_sensor,NaN\n";
  CHECK_THROWS_AS(parse_long_csv_text(text), ValidationError);
  CHECK_THROWS_AS(parse_long_csv_text("time,dev,m,v\n"), ValidationError);
}

TEST_CASE("build_series") {
  SUBCASE("dense grid") {
    const std::vector<RawRecord> r{rec(0, 1), rec(300, 2), rec(600, 3)};
    const auto store = build_series(r);
    const TimeSeries* s = store.find("vav_1", MK::zone_air_temperature_sensor);
    REQUIRE(s);
    CHECK(s->size() == 3);
    CHECK(s->missing_count() == 0);
  }
  SUBCASE("absent grid point becomes a gap") {
    const std::vector<RawRecord> r{rec(0, 1), rec(600, 3)};
    const auto store = build_series(r);
    const TimeSeries& s = store.series.begin()->second;
    REQUIRE(s.size() == 3);
    CHECK(is_missing(s.values()[1]));
  }
  SUBCASE("duplicate bucket keeps the later record") {
    const std::vector<RawRecord> r{rec(0, 1), rec(120, 7)};
    const auto store = build_series(r);
    const TimeSeries& s = store.series.begin()->second;
    REQUIRE(s.size() == 1);
    CHECK(s.values()[0] == 7);
    CHECK(store.duplicate_count == 1);
  }
  SUBCASE("present count = accepted - overwrites") {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<RawRecord> r;
      const char* devs[] = {"a", "b", "c"};
      for (int i = 0; i < 300; ++i) {
        r.push_back(rec(static_cast<std::int64_t>(gen() % 20000), static_cast<double>(gen() % 100),
                        devs[gen() % 3], kAllMeasurementKinds[gen() % 9]));
      }
      const auto store = build_series(r);
      CHECK(store.present_count() == r.size() - store.duplicate_count);
    }
  }
}

TEST_CASE("parse_device_meta") {
  const std::string header = std::string(kDeviceHeader) + "\n";
  const auto ok = parse_device_meta_text(header + "vav_1,VAV RH 1-1-19,bldg,VAV,zone_1,1,3.5,2\n" +
                                         "wx,Weather,bldg,WEATHER,,0,0,0\n");
  REQUIRE(ok.size() == 2);
  CHECK(ok[0].device_type == DeviceType::VAV);
  CHECK(ok[0].zone_id == "zone_1");
  CHECK(ok[0].x == 3.5);
  CHECK(ok[1].device_type == DeviceType::WEATHER);
  CHECK(ok[1].zone_id.empty());

  CHECK_THROWS_WITH_AS(parse_device_meta_text(header + "vav_1,a,b,VAV,z,1,0,0\nvav_1,a,b,VAV,z,1,0,0\n"),
                       doctest::Contains("vav_1"), ValidationError);
  CHECK_THROWS_AS(parse_device_meta_text(header + "vav_2,a,b,VAV,,1,0,0\n"), ValidationError);
  CHECK_THROWS_AS(parse_device_meta_text(header + "vav_2,a,b,FAN,z,1,0,0\n"), ValidationError);

  // Formatting and re-parsing gives the same list.
  const auto again = parse_device_meta_text(format_device_meta(ok));
  REQUIRE(again.size() == 2);
  CHECK(again[0].name == "VAV RH 1-1-19");
}

TEST_CASE("validate_split") {
  DatasetManifest m;
  m.split = SplitLabel::train_2022;
  const std::int64_t march = make_utc(2022, 3, 1).epoch_seconds;
  SUBCASE("in range") {
    const std::vector<RawRecord> r{rec(march, 1), rec(march + 300, 2)};
    const auto rep = validate_split(m, build_series(r));
    CHECK(rep.violations.empty());
    CHECK(rep.ok());
  }
  SUBCASE("one July reading") {
    const std::int64_t july = make_utc(2022, 7, 2).epoch_seconds;
    const std::vector<RawRecord> r{rec(march, 1), rec(july, 2)};
    const auto store = build_series(r);
    const auto rep = validate_split(m, store);
    CHECK(rep.violations.size() == 1);
    REQUIRE(rep.missing.size() == 1);
    CHECK(rep.missing[0].missing_ratio == missing_ratio(store.series.begin()->second));
  }
  SUBCASE("missing ratios per series, counted by hand") {
    const std::vector<RawRecord> r{rec(march, 1), rec(march + 900, 2), rec(march, 5, "b")};
    const auto rep = validate_split(m, build_series(r));
    REQUIRE(rep.missing.size() == 2);
    CHECK(rep.missing[0].missing_ratio == 0.0);  // "b" sorts first
    CHECK(rep.missing[1].missing_ratio == 2.0 / 4.0);
  }
  CHECK(split_range(SplitLabel::test_2024).first == make_utc(2024, 1, 1));
  CHECK(parse_split_label("val_2023") == SplitLabel::val_2023);
}

TEST_CASE("canonical store round-trips bit-exactly through long CSV") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> noise(70.0, 5.0);
  std::vector<RawRecord> r;
  for (int i = 0; i < 500; ++i) {
    if (gen() % 7 == 0) continue;  // leave gaps
    r.push_back(rec(make_utc(2022, 2, 1).epoch_seconds + 300 * i, noise(gen)));
    r.push_back(rec(make_utc(2022, 2, 1).epoch_seconds + 300 * i, noise(gen) / 3.0, "ahu_1",
                    MK::supply_air_pressure_setpoint));
  }
  const SeriesStore original = build_series(r);
  const auto dir = temp_dir("canonical");
  write_canonical(dir, original);
  const SeriesStore loaded = read_canonical(dir);
  REQUIRE(loaded.series.size() == original.series.size());
  for (const auto& [key, s] : original.series) CHECK(loaded.series.at(key) == s);

  const auto reparsed = build_series(parse_long_csv_text(format_long_csv(original)).records);
  for (const auto& [key, s] : original.series) CHECK(reparsed.series.at(key) == s);

  CHECK_THROWS_AS(read_canonical(dir / "nope"), ValidationError);
  std::filesystem::remove_all(dir);
}
