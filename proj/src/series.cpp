#include "zonecast/series.hpp"

#include "zonecast/error.hpp"

#include <algorithm>
#include <bit>
#include <set>
#include <sstream>

namespace zonecast {
namespace {

constexpr std::array<std::string_view, 9> kKindNames = {
    "zone_air_temperature_sensor",
    "zone_air_cooling_setpoint",
    "zone_air_heating_setpoint",
    "supply_air_flowrate_sensor",
    "supply_air_flowrate_setpoint",
    "supply_air_pressure_setpoint",
    "supply_air_temperature_setpoint",
    "supply_water_temperature_setpoint",
    "outside_air_temperature_sensor",
};

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

void check_column(const std::vector<double>& col, MeasurementKind kind) {
  for (double v : col) {
    if (!std::isfinite(v)) {
      throw ValidationError("zone frame column " + std::string(to_string(kind)) +
                            " contains a missing or non-finite value");
    }
  }
}

}  // namespace

std::string_view to_string(MeasurementKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<MeasurementKind> parse_measurement_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return kAllMeasurementKinds[i];
  }
  return std::nullopt;
}

bool is_sensor(MeasurementKind kind) { return to_string(kind).ends_with("_sensor"); }

bool is_supported_step(std::int64_t step_seconds) {
  return step_seconds == 300 || step_seconds == 900 || step_seconds == 3600;
}

double fahrenheit_to_celsius(double f) {
  if (!std::isfinite(f)) throw ValidationError("fahrenheit_to_celsius: non-finite input");
  return (f - 32.0) * 5.0 / 9.0;
}

double celsius_to_fahrenheit(double c) {
  if (!std::isfinite(c)) throw ValidationError("celsius_to_fahrenheit: non-finite input");
  return c * 9.0 / 5.0 + 32.0;
}

// ---------------------------------------------------------------------------
// TimeSeries

TimeSeries::TimeSeries(std::string device_id, MeasurementKind kind, std::int64_t step_seconds,
                       Timestamp start, std::vector<double> values)
    : device_id_(std::move(device_id)),
      kind_(kind),
      step_seconds_(step_seconds),
      start_(start),
      values_(std::move(values)) {
  if (device_id_.empty()) throw ValidationError("time series needs a device id");
  if (!is_supported_step(step_seconds_)) {
    throw ValidationError("unsupported step " + std::to_string(step_seconds_) +
                          " s (expected 300, 900 or 3600)");
  }
  if (values_.empty()) throw ValidationError("time series " + device_id_ + " is empty");
  if (start_.epoch_seconds < 0) throw ValidationError("time series starts before the epoch");
  for (double v : values_) {
    if (std::isinf(v)) throw ValidationError("time series " + device_id_ + " holds an infinite value");
  }
}

std::size_t TimeSeries::missing_count() const {
  return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), is_missing));
}

TimeSeries TimeSeries::with_values(std::vector<double> values) const {
  return TimeSeries(device_id_, kind_, step_seconds_, start_, std::move(values));
}

bool operator==(const TimeSeries& a, const TimeSeries& b) {
  if (a.device_id_ != b.device_id_ || a.kind_ != b.kind_ || a.step_seconds_ != b.step_seconds_ ||
      a.start_ != b.start_ || a.values_.size() != b.values_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.values_.size(); ++i) {
    const double x = a.values_[i];
    const double y = b.values_[i];
    if (is_missing(x) != is_missing(y)) return false;
    if (!is_missing(x) && std::bit_cast<std::uint64_t>(x) != std::bit_cast<std::uint64_t>(y)) {
      return false;
    }
  }
  return true;
}

double missing_ratio(const TimeSeries& s) {
  return static_cast<double>(s.missing_count()) / static_cast<double>(s.size());
}

// ---------------------------------------------------------------------------
// DeviceType

std::string_view to_string(DeviceType type) {
  switch (type) {
    case DeviceType::VAV: return "VAV";
    case DeviceType::AHU: return "AHU";
    case DeviceType::WEATHER: return "WEATHER";
  }
  return "?";
}

std::optional<DeviceType> parse_device_type(std::string_view name) {
  if (name == "VAV") return DeviceType::VAV;
  if (name == "AHU") return DeviceType::AHU;
  if (name == "WEATHER") return DeviceType::WEATHER;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// ZoneFrame

ZoneFrame::ZoneFrame(std::string zone_id, std::int64_t step_seconds, Timestamp start,
                     Channels channels)
    : zone_id_(std::move(zone_id)),
      step_seconds_(step_seconds),
      start_(start),
      channels_(std::move(channels)),
      n_rows_(0) {
  if (step_seconds_ <= 0) throw ValidationError("zone frame step must be positive");
  if (channels_.empty()) throw ValidationError("zone frame has no channels");
  n_rows_ = channels_.begin()->second.size();
  if (n_rows_ == 0) throw ValidationError("zone frame has no rows");
  for (const auto& [kind, col] : channels_) {
    if (col.size() != n_rows_) {
      throw ValidationError("zone frame column " + std::string(to_string(kind)) + " has " +
                            std::to_string(col.size()) + " rows, expected " +
                            std::to_string(n_rows_));
    }
    check_column(col, kind);
  }
}

std::span<const double> ZoneFrame::column(MeasurementKind kind) const {
  const auto it = channels_.find(kind);
  if (it == channels_.end()) {
    throw ValidationError("zone frame " + zone_id_ + " lacks channel " + std::string(to_string(kind)));
  }
  return it->second;
}

ZoneFrame ZoneFrame::slice(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > n_rows_) throw ValidationError("zone frame slice out of range");
  Channels out;
  for (const auto& [kind, col] : channels_) {
    out.emplace(kind, std::vector<double>(col.begin() + static_cast<std::ptrdiff_t>(begin),
                                          col.begin() + static_cast<std::ptrdiff_t>(end)));
  }
  return ZoneFrame(zone_id_, step_seconds_, time_at(begin), std::move(out));
}

bool ZoneFrame::has_required_channels() const {
  return std::all_of(kRequiredZoneChannels.begin(), kRequiredZoneChannels.end(),
                     [this](MeasurementKind k) { return has(k); });
}

// ---------------------------------------------------------------------------
// Operations

ZoneFrame align_channels(std::span<const TimeSeries> series,
                         std::span<const MeasurementKind> required, std::string zone_id) {
  if (series.empty()) throw ValidationError("align_channels: no series given");
  const std::int64_t step = series.front().step_seconds();
  std::set<MeasurementKind> seen;
  for (const TimeSeries& s : series) {
    if (s.step_seconds() != step) {
      throw ValidationError("align_channels: mixed steps (" + std::to_string(step) + " vs " +
                            std::to_string(s.step_seconds()) + ")");
    }
    if (!seen.insert(s.kind()).second) {
      throw ValidationError("align_channels: duplicate channel " + std::string(to_string(s.kind())));
    }
    if ((s.start().epoch_seconds - series.front().start().epoch_seconds) % step != 0) {
      throw ValidationError("align_channels: series " + s.device_id() + " is off the common grid");
    }
  }
  std::string missing;
  for (MeasurementKind k : required) {
    if (!seen.contains(k)) {
      if (!missing.empty()) missing += ", ";
      missing += to_string(k);
    }
  }
  if (!missing.empty()) throw ValidationError("align_channels: missing required channels: " + missing);

  Timestamp lo = series.front().start();
  Timestamp hi = series.front().end();
  for (const TimeSeries& s : series) {
    lo = std::max(lo, s.start());
    hi = std::min(hi, s.end());
  }
  if (hi <= lo) throw ValidationError("align_channels: empty overlap");
  const auto n_rows = static_cast<std::size_t>((hi.epoch_seconds - lo.epoch_seconds) / step);

  ZoneFrame::Channels channels;
  for (const TimeSeries& s : series) {
    const auto offset = static_cast<std::size_t>((lo.epoch_seconds - s.start().epoch_seconds) / step);
    auto vals = s.values().subspan(offset, n_rows);
    if (std::any_of(vals.begin(), vals.end(), is_missing)) {
      throw ValidationError("align_channels: series " + s.device_id() + "/" +
                            std::string(to_string(s.kind())) + " has gaps inside the overlap");
    }
    channels.emplace(s.kind(), std::vector<double>(vals.begin(), vals.end()));
  }
  if (zone_id.empty()) zone_id = series.front().device_id();
  return ZoneFrame(std::move(zone_id), step, lo, std::move(channels));
}

std::vector<ZoneFrame> slice_windows(const ZoneFrame& frame, std::int64_t window_seconds) {
  if (window_seconds <= 0 || window_seconds % frame.step_seconds() != 0) {
    throw ValidationError("slice_windows: window of " + std::to_string(window_seconds) +
                          " s is not a positive multiple of the " +
                          std::to_string(frame.step_seconds()) + " s step");
  }
  const auto rows = static_cast<std::size_t>(window_seconds / frame.step_seconds());
  std::vector<ZoneFrame> out;
  for (std::size_t b = 0; b + rows <= frame.n_rows(); b += rows) out.push_back(frame.slice(b, b + rows));
  return out;
}

TimeSeries resample_mean(const TimeSeries& s, std::int64_t target_step) {
  const std::int64_t step = s.step_seconds();
  if (target_step <= step || target_step % step != 0) {
    std::ostringstream msg;
    msg << "resample_mean: target step " << target_step << " s is not a multiple of " << step
        << " s greater than it";
    throw ValidationError(msg.str());
  }
  const std::int64_t out_start = floor_div(s.start().epoch_seconds, target_step) * target_step;
  const std::int64_t last = s.time_at(s.size() - 1).epoch_seconds;
  const auto n_out = static_cast<std::size_t>(floor_div(last - out_start, target_step) + 1);

  std::vector<double> sums(n_out, 0.0);
  std::vector<std::size_t> counts(n_out, 0);
  const auto values = s.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (is_missing(values[i])) continue;
    const auto b = static_cast<std::size_t>((s.time_at(i).epoch_seconds - out_start) / target_step);
    sums[b] += values[i];
    ++counts[b];
  }
  std::vector<double> out(n_out, kMissing);
  for (std::size_t b = 0; b < n_out; ++b) {
    if (counts[b] > 0) out[b] = sums[b] / static_cast<double>(counts[b]);
  }
  return TimeSeries(s.device_id(), s.kind(), target_step, Timestamp{out_start}, std::move(out));
}

}  // namespace zonecast
