#pragma once

// Autoregressive design matrices and the calendar train/val/test split.

#include "zonecast/series.hpp"

#include <span>
#include <string>
#include <vector>

namespace zonecast::features {

struct ForecastConfig {
  int lookback_steps = 0;  // L
  int horizon_steps = 0;   // H
  std::int64_t step_seconds = 900;
  std::vector<MeasurementKind> exogenous;

  /// L = 1 week, H = 2 weeks of steps, and the standard exogenous channels.
  static ForecastConfig defaults(std::int64_t step_seconds);
  /// Outside temp, cooling/heating setpoint, supply flow, and the supply
  /// pressure setpoint when `with_pressure`.
  static std::vector<MeasurementKind> default_exogenous(bool with_pressure);

  /// L * (1 + |exog|) + |exog|
  std::size_t n_features() const;
  void validate() const;
};

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  const std::vector<double>& data() const { return data_; }

  /// Copies the listed rows, in order.
  Matrix take_rows(std::span<const std::size_t> idx) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct DesignMatrix {
  Matrix X;
  std::vector<double> y;
  std::vector<std::string> feature_names;
  std::vector<Timestamp> sample_timestamps;

  std::size_t n_samples() const { return y.size(); }
  /// Appends the samples of another matrix with the same feature names.
  void append(const DesignMatrix& other);
};

/// Feature names in row order, e.g. `zone_air_temperature_sensor_lag3`;
/// current-step exogenous values use `_lag0`.
std::vector<std::string> feature_names(const ForecastConfig& cfg);

/// Writes the feature row for target index t into `out` (size n_features):
/// [y_{t-L..t-1}, for each exogenous e: e_{t-L..t-1}, e_t].
void fill_row(std::span<const double> target, std::span<const std::span<const double>> exog, std::size_t t,
              int lookback, std::span<double> out);

/// One sample per t in [L, n_rows). Throws ValidationError if the frame has
/// at most L rows or lacks a channel.
DesignMatrix build_design(const ZoneFrame& frame, const ForecastConfig& cfg);

struct SplitFrames {
  std::vector<ZoneFrame> train;
  std::vector<ZoneFrame> val;
  std::vector<ZoneFrame> test;
};

/// Cuts frames at Jan 1 / Jul 1 (UTC). First halves before 2024 go to train,
/// second halves before 2024 to val, the first half of 2024 to test. Rows
/// from mid-2024 on are dropped. A row at a cut instant opens the later piece.
SplitFrames calendar_split(std::span<const ZoneFrame> frames);

/// Splits aligned series into maximal gap-free frames of at least min_rows.
/// Series must share one step and grid phase; the common range is used.
std::vector<ZoneFrame> segment_frames(std::span<const TimeSeries> series, const std::string& zone_id,
                                      std::size_t min_rows);

/// Header = feature names + `target,timestamp`.
std::string format_design_csv(const DesignMatrix& d);

}  // namespace zonecast::features
