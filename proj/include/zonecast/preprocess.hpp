#pragma once

// Cleaning stage applied per series, always in this order:
// remove_outliers -> impute -> downsample.

#include "zonecast/series.hpp"

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace zonecast::preprocess {

struct Bounds {
  double lo;
  double hi;
};

struct PreprocessConfig {
  int max_gap_steps = 6;
  std::map<MeasurementKind, Bounds> bounds = default_bounds();
  int mad_window = 96;
  double mad_k = 6.0;
  /// Kinds screened by the rolling MAD; all kinds get the bound check.
  /// Setpoints are piecewise constant and VAV airflow follows the occupancy
  /// schedule in steps and ramps, so by default only temperature sensors.
  std::set<MeasurementKind> mad_kinds = default_mad_kinds();
  std::int64_t target_step_seconds = 900;

  static std::map<MeasurementKind, Bounds> default_bounds();
  static std::set<MeasurementKind> default_mad_kinds();
  /// Throws ValidationError if an invariant is broken.
  void validate() const;
};

inline constexpr double kMadFloor = 1e-6;

struct OutlierReport {
  std::string device_id;
  MeasurementKind kind;
  std::size_t bound_count = 0;
  std::size_t mad_count = 0;
  std::size_t imputed_count = 0;
};

/// Out-of-bounds values become gaps, then values further than
/// mad_k * max(rolling MAD, kMadFloor) from the centred rolling median of
/// present values. The MAD pass repeats until nothing new is flagged, so the
/// operation is idempotent.
std::pair<TimeSeries, OutlierReport> remove_outliers(const TimeSeries& s, const PreprocessConfig& cfg);

/// Interior gaps of at most max_gap_steps are linearly interpolated; leading
/// and trailing gaps of at most max_gap_steps take the nearest present value.
/// Throws ValidationError for an all-missing series.
TimeSeries impute(const TimeSeries& s, const PreprocessConfig& cfg);

/// resample_mean to cfg.target_step_seconds; input must be at 300 s.
TimeSeries downsample(const TimeSeries& s, const PreprocessConfig& cfg);

struct CleanedSeries {
  TimeSeries series;
  OutlierReport report;
};

/// The fixed pipeline for one series. imputed_count counts gaps filled.
CleanedSeries clean(const TimeSeries& s, const PreprocessConfig& cfg);

/// `device_id,kind,bound_count,mad_count,imputed_count`
std::string format_outlier_report(std::span<const OutlierReport> rows);

}  // namespace zonecast::preprocess
