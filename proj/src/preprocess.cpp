#include "zonecast/preprocess.hpp"

#include "zonecast/csv.hpp"
#include "zonecast/error.hpp"

#include <algorithm>
#include <cmath>

namespace zonecast::preprocess {
namespace {

double median_in_place(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return lower + (upper - lower) / 2.0;
}

// One screening pass over a snapshot; returns indices to blank.
std::vector<std::size_t> mad_pass(const std::vector<double>& values, int window, double k) {
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  const std::ptrdiff_t before = (window - 1) / 2;
  const std::ptrdiff_t after = window / 2;
  std::vector<std::size_t> flagged;
  std::vector<double> buf;
  buf.reserve(static_cast<std::size_t>(window));
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double x = values[static_cast<std::size_t>(i)];
    if (is_missing(x)) continue;
    buf.clear();
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - before); j <= std::min(n - 1, i + after); ++j) {
      const double v = values[static_cast<std::size_t>(j)];
      if (!is_missing(v)) buf.push_back(v);
    }
    const double med = median_in_place(buf);
    for (double& v : buf) v = std::fabs(v - med);
    const double mad = std::max(median_in_place(buf), kMadFloor);
    if (std::fabs(x - med) > k * mad) flagged.push_back(static_cast<std::size_t>(i));
  }
  return flagged;
}

}  // namespace

std::map<MeasurementKind, Bounds> PreprocessConfig::default_bounds() {
  using MK = MeasurementKind;
  const Bounds temp{-30.0, 130.0};
  const Bounds flow{0.0, 20.0};
  return {
      {MK::zone_air_temperature_sensor, temp},
      {MK::zone_air_cooling_setpoint, temp},
      {MK::zone_air_heating_setpoint, temp},
      {MK::supply_air_flowrate_sensor, flow},
      {MK::supply_air_flowrate_setpoint, flow},
      {MK::supply_air_pressure_setpoint, {0.0, 2000.0}},
      {MK::supply_air_temperature_setpoint, temp},
      {MK::supply_water_temperature_setpoint, temp},
      {MK::outside_air_temperature_sensor, temp},
  };
}

std::set<MeasurementKind> PreprocessConfig::default_mad_kinds() {
  return {MeasurementKind::zone_air_temperature_sensor, MeasurementKind::outside_air_temperature_sensor};
}

void PreprocessConfig::validate() const {
  if (max_gap_steps < 1) throw ValidationError("preprocess: max_gap_steps must be >= 1");
  if (mad_window < 1) throw ValidationError("preprocess: mad_window must be >= 1");
  if (!(mad_k > 0.0)) throw ValidationError("preprocess: mad_k must be > 0");
  if (target_step_seconds != 900 && target_step_seconds != 3600) {
    throw ValidationError("preprocess: target_step_seconds must be 900 or 3600");
  }
  for (const auto& [kind, b] : bounds) {
    if (!(b.lo < b.hi)) {
      throw ValidationError("preprocess: bounds for " + std::string(to_string(kind)) + " need lo < hi");
    }
  }
}

std::pair<TimeSeries, OutlierReport> remove_outliers(const TimeSeries& s, const PreprocessConfig& cfg) {
  const auto it = cfg.bounds.find(s.kind());
  if (it == cfg.bounds.end()) {
    throw ValidationError("remove_outliers: no bounds configured for " + std::string(to_string(s.kind())));
  }
  OutlierReport report{s.device_id(), s.kind(), 0, 0, 0};
  std::vector<double> values(s.values().begin(), s.values().end());
  for (double& v : values) {
    if (!is_missing(v) && (v < it->second.lo || v > it->second.hi)) {
      v = kMissing;
      ++report.bound_count;
    }
  }
  if (cfg.mad_kinds.contains(s.kind())) {
    for (;;) {
      const auto flagged = mad_pass(values, cfg.mad_window, cfg.mad_k);
      if (flagged.empty()) break;
      for (std::size_t i : flagged) values[i] = kMissing;
      report.mad_count += flagged.size();
    }
  }
  return {s.with_values(std::move(values)), report};
}

TimeSeries impute(const TimeSeries& s, const PreprocessConfig& cfg) {
  std::vector<double> v(s.values().begin(), s.values().end());
  const std::size_t n = v.size();
  const auto max_gap = static_cast<std::size_t>(cfg.max_gap_steps);
  std::size_t i = 0;
  bool any_present = false;
  while (i < n) {
    if (!is_missing(v[i])) {
      any_present = true;
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && is_missing(v[j])) ++j;
    const std::size_t gap = j - i;
    if (gap <= max_gap) {
      if (i > 0 && j < n) {
        const double a = v[i - 1];
        const double b = v[j];
        const double span = static_cast<double>(gap + 1);
        for (std::size_t k = i; k < j; ++k) {
          v[k] = a + (b - a) * (static_cast<double>(k - i + 1) / span);
        }
      } else if (i == 0 && j < n) {
        std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(j), v[j]);
      } else if (i > 0 && j == n) {
        std::fill(v.begin() + static_cast<std::ptrdiff_t>(i), v.end(), v[i - 1]);
      }
    }
    i = j;
  }
  if (!any_present) {
    throw ValidationError("impute: series " + s.device_id() + "/" + std::string(to_string(s.kind())) +
                          " has no present values");
  }
  return s.with_values(std::move(v));
}

TimeSeries downsample(const TimeSeries& s, const PreprocessConfig& cfg) {
  if (s.step_seconds() != 300) {
    throw ValidationError("downsample: expected a 300 s series, got " + std::to_string(s.step_seconds()) + " s");
  }
  return resample_mean(s, cfg.target_step_seconds);
}

CleanedSeries clean(const TimeSeries& s, const PreprocessConfig& cfg) {
  auto [screened, report] = remove_outliers(s, cfg);
  const std::size_t gaps_before = screened.missing_count();
  TimeSeries filled = impute(screened, cfg);
  report.imputed_count = gaps_before - filled.missing_count();
  return {downsample(filled, cfg), report};
}

std::string format_outlier_report(std::span<const OutlierReport> rows) {
  std::string out = "device_id,kind,bound_count,mad_count,imputed_count\n";
  for (const OutlierReport& r : rows) {
    out += csv::quote(r.device_id) + ',' + std::string(to_string(r.kind)) + ',' +
           std::to_string(r.bound_count) + ',' + std::to_string(r.mad_count) + ',' +
           std::to_string(r.imputed_count) + '\n';
  }
  return out;
}

}  // namespace zonecast::preprocess
