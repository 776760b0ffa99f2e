#pragma once

// Canonical time-series and zone-frame types.
//
// A TimeSeries is a uniformly spaced single-channel stream; the timestamp of
// value i is start + i * step. Gaps are stored as kMissing (a quiet NaN);
// present values are always finite.
//
// A ZoneFrame is a gap-free, row-aligned set of channels for one zone.

#include "zonecast/time.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace zonecast {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

enum class MeasurementKind {
  zone_air_temperature_sensor,
  zone_air_cooling_setpoint,
  zone_air_heating_setpoint,
  supply_air_flowrate_sensor,
  supply_air_flowrate_setpoint,
  supply_air_pressure_setpoint,
  supply_air_temperature_setpoint,
  supply_water_temperature_setpoint,
  outside_air_temperature_sensor,
};

inline constexpr std::array<MeasurementKind, 9> kAllMeasurementKinds = {
    MeasurementKind::zone_air_temperature_sensor,
    MeasurementKind::zone_air_cooling_setpoint,
    MeasurementKind::zone_air_heating_setpoint,
    MeasurementKind::supply_air_flowrate_sensor,
    MeasurementKind::supply_air_flowrate_setpoint,
    MeasurementKind::supply_air_pressure_setpoint,
    MeasurementKind::supply_air_temperature_setpoint,
    MeasurementKind::supply_water_temperature_setpoint,
    MeasurementKind::outside_air_temperature_sensor,
};

/// Channels every zone frame admitted to training must carry.
inline constexpr std::array<MeasurementKind, 5> kRequiredZoneChannels = {
    MeasurementKind::zone_air_temperature_sensor,
    MeasurementKind::zone_air_cooling_setpoint,
    MeasurementKind::zone_air_heating_setpoint,
    MeasurementKind::supply_air_flowrate_sensor,
    MeasurementKind::outside_air_temperature_sensor,
};

std::string_view to_string(MeasurementKind kind);
std::optional<MeasurementKind> parse_measurement_kind(std::string_view name);

/// True for measured channels (name ends in `_sensor`), false for setpoints.
bool is_sensor(MeasurementKind kind);

/// Allowed step sizes in seconds: 5 min, 15 min, 1 h.
bool is_supported_step(std::int64_t step_seconds);

double fahrenheit_to_celsius(double f);
double celsius_to_fahrenheit(double c);

class TimeSeries {
 public:
  /// Throws ValidationError for an unsupported step, empty values, a
  /// non-finite present value (±inf) or an empty device id.
  TimeSeries(std::string device_id, MeasurementKind kind, std::int64_t step_seconds,
             Timestamp start, std::vector<double> values);

  const std::string& device_id() const { return device_id_; }
  MeasurementKind kind() const { return kind_; }
  std::int64_t step_seconds() const { return step_seconds_; }
  Timestamp start() const { return start_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  Timestamp time_at(std::size_t i) const {
    return {start_.epoch_seconds + static_cast<std::int64_t>(i) * step_seconds_};
  }
  /// Timestamp one step past the last value.
  Timestamp end() const { return time_at(values_.size()); }

  std::size_t missing_count() const;

  /// Same metadata, new values (validated).
  TimeSeries with_values(std::vector<double> values) const;

  friend bool operator==(const TimeSeries& a, const TimeSeries& b);

 private:
  std::string device_id_;
  MeasurementKind kind_;
  std::int64_t step_seconds_;
  Timestamp start_;
  std::vector<double> values_;
};

enum class DeviceType { VAV, AHU, WEATHER };

std::string_view to_string(DeviceType type);
std::optional<DeviceType> parse_device_type(std::string_view name);

struct DeviceMeta {
  std::string device_id;
  std::string name;
  std::string ns;
  DeviceType device_type = DeviceType::VAV;
  std::string zone_id;
  int floor = 0;
  double x = 0.0;
  double y = 0.0;
};

class ZoneFrame {
 public:
  using Channels = std::map<MeasurementKind, std::vector<double>>;

  /// Throws ValidationError if columns differ in length, are empty, or hold
  /// missing/non-finite values.
  ZoneFrame(std::string zone_id, std::int64_t step_seconds, Timestamp start, Channels channels);

  const std::string& zone_id() const { return zone_id_; }
  std::int64_t step_seconds() const { return step_seconds_; }
  Timestamp start() const { return start_; }
  std::size_t n_rows() const { return n_rows_; }
  const Channels& channels() const { return channels_; }
  bool has(MeasurementKind kind) const { return channels_.contains(kind); }
  /// Throws ValidationError naming the kind if absent.
  std::span<const double> column(MeasurementKind kind) const;
  Timestamp time_at(std::size_t row) const {
    return {start_.epoch_seconds + static_cast<std::int64_t>(row) * step_seconds_};
  }

  /// Rows [begin, end) as a new frame.
  ZoneFrame slice(std::size_t begin, std::size_t end) const;

  bool has_required_channels() const;

  friend bool operator==(const ZoneFrame&, const ZoneFrame&) = default;

 private:
  std::string zone_id_;
  std::int64_t step_seconds_;
  Timestamp start_;
  Channels channels_;
  std::size_t n_rows_;
};

/// Row-aligns series of one zone over their maximal common range.
/// `required` kinds must all be present; series must share one step and a
/// common grid phase, and have no gaps inside the overlap.
ZoneFrame align_channels(std::span<const TimeSeries> series,
                         std::span<const MeasurementKind> required,
                         std::string zone_id = {});

/// Consecutive non-overlapping windows of window_seconds; the trailing
/// remainder is dropped. A frame shorter than one window yields no windows.
std::vector<ZoneFrame> slice_windows(const ZoneFrame& frame, std::int64_t window_seconds);

/// Bucket means onto a coarser grid aligned to multiples of target_step since
/// the epoch. Missing values are skipped; an all-missing bucket is missing.
TimeSeries resample_mean(const TimeSeries& s, std::int64_t target_step);

double missing_ratio(const TimeSeries& s);

}  // namespace zonecast
