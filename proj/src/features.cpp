#include "zonecast/features.hpp"

#include "zonecast/csv.hpp"
#include "zonecast/error.hpp"

#include <algorithm>
#include <cmath>

namespace zonecast::features {
namespace {

enum class Half { train, val, test, drop };

Half half_of(Timestamp ts) {
  const CivilDate d = civil_date(ts);
  const bool first = d.month < 7;
  if (d.year < 2024) return first ? Half::train : Half::val;
  if (d.year == 2024 && first) return Half::test;
  return Half::drop;
}

// Start of the next half-year after ts.
Timestamp next_cut(Timestamp ts) {
  const CivilDate d = civil_date(ts);
  return d.month < 7 ? make_utc(d.year, 7, 1) : make_utc(d.year + 1, 1, 1);
}

}  // namespace

ForecastConfig ForecastConfig::defaults(std::int64_t step_seconds) {
  if (!is_supported_step(step_seconds)) {
    throw ValidationError("forecast config: unsupported step " + std::to_string(step_seconds));
  }
  ForecastConfig c;
  c.step_seconds = step_seconds;
  c.lookback_steps = static_cast<int>(7 * 86400 / step_seconds);
  c.horizon_steps = static_cast<int>(14 * 86400 / step_seconds);
  c.exogenous = default_exogenous(false);
  return c;
}

std::vector<MeasurementKind> ForecastConfig::default_exogenous(bool with_pressure) {
  using MK = MeasurementKind;
  std::vector<MK> e{MK::outside_air_temperature_sensor, MK::zone_air_cooling_setpoint,
                    MK::zone_air_heating_setpoint, MK::supply_air_flowrate_sensor};
  if (with_pressure) e.push_back(MK::supply_air_pressure_setpoint);
  return e;
}

std::size_t ForecastConfig::n_features() const {
  const std::size_t e = exogenous.size();
  return static_cast<std::size_t>(lookback_steps) * (1 + e) + e;
}

void ForecastConfig::validate() const {
  if (lookback_steps < 1) throw ValidationError("forecast config: lookback_steps must be >= 1");
  if (horizon_steps < 1) throw ValidationError("forecast config: horizon_steps must be >= 1");
  if (!is_supported_step(step_seconds)) {
    throw ValidationError("forecast config: unsupported step " + std::to_string(step_seconds));
  }
  for (std::size_t i = 0; i < exogenous.size(); ++i) {
    if (exogenous[i] == MeasurementKind::zone_air_temperature_sensor) {
      throw ValidationError("forecast config: the target cannot be exogenous");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (exogenous[i] == exogenous[j]) {
        throw ValidationError("forecast config: duplicate exogenous " + std::string(to_string(exogenous[i])));
      }
    }
  }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw ValidationError("matrix: data size does not match shape");
}

Matrix Matrix::take_rows(std::span<const std::size_t> idx) const {
  Matrix out(idx.size(), cols_);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(idx[i] * cols_), cols_,
                out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
  }
  return out;
}

void DesignMatrix::append(const DesignMatrix& other) {
  if (other.n_samples() == 0) return;
  if (n_samples() == 0) {
    *this = other;
    return;
  }
  if (other.feature_names != feature_names) throw ValidationError("design matrix: feature names differ");
  std::vector<double> data = X.data();
  data.insert(data.end(), other.X.data().begin(), other.X.data().end());
  X = Matrix(X.rows() + other.X.rows(), X.cols(), std::move(data));
  y.insert(y.end(), other.y.begin(), other.y.end());
  sample_timestamps.insert(sample_timestamps.end(), other.sample_timestamps.begin(),
                           other.sample_timestamps.end());
}

std::vector<std::string> feature_names(const ForecastConfig& cfg) {
  std::vector<std::string> names;
  names.reserve(cfg.n_features());
  const auto lags = [&](std::string_view base, int from) {
    for (int k = cfg.lookback_steps; k >= from; --k) names.push_back(std::string(base) + "_lag" + std::to_string(k));
  };
  lags(to_string(MeasurementKind::zone_air_temperature_sensor), 1);
  for (MeasurementKind e : cfg.exogenous) lags(to_string(e), 0);
  return names;
}

void fill_row(std::span<const double> target, std::span<const std::span<const double>> exog, std::size_t t,
              int lookback, std::span<double> out) {
  const auto L = static_cast<std::size_t>(lookback);
  std::size_t k = 0;
  for (std::size_t j = t - L; j < t; ++j) out[k++] = target[j];
  for (const auto& e : exog) {
    for (std::size_t j = t - L; j <= t; ++j) out[k++] = e[j];
  }
}

DesignMatrix build_design(const ZoneFrame& frame, const ForecastConfig& cfg) {
  cfg.validate();
  const auto L = static_cast<std::size_t>(cfg.lookback_steps);
  if (frame.n_rows() <= L) {
    throw ValidationError("build_design: frame " + frame.zone_id() + " has " + std::to_string(frame.n_rows()) +
                          " rows; need at least " + std::to_string(L + 1));
  }
  const auto target = frame.column(MeasurementKind::zone_air_temperature_sensor);
  std::vector<std::span<const double>> exog;
  for (MeasurementKind e : cfg.exogenous) exog.push_back(frame.column(e));

  const std::size_t n = frame.n_rows() - L;
  DesignMatrix d;
  d.X = Matrix(n, cfg.n_features());
  d.y.reserve(n);
  d.sample_timestamps.reserve(n);
  d.feature_names = feature_names(cfg);
  for (std::size_t t = L; t < frame.n_rows(); ++t) {
    fill_row(target, exog, t, cfg.lookback_steps, d.X.row(t - L));
    d.y.push_back(target[t]);
    d.sample_timestamps.push_back(frame.time_at(t));
  }
  return d;
}

SplitFrames calendar_split(std::span<const ZoneFrame> frames) {
  SplitFrames out;
  for (const ZoneFrame& f : frames) {
    std::size_t begin = 0;
    while (begin < f.n_rows()) {
      const Timestamp t0 = f.time_at(begin);
      const std::int64_t cut = next_cut(t0).epoch_seconds;
      // First row at or after the cut.
      const std::int64_t offset = cut - f.start().epoch_seconds;
      const auto step = f.step_seconds();
      const std::size_t end = std::min<std::size_t>(f.n_rows(), static_cast<std::size_t>((offset + step - 1) / step));
      switch (half_of(t0)) {
        case Half::train: out.train.push_back(f.slice(begin, end)); break;
        case Half::val: out.val.push_back(f.slice(begin, end)); break;
        case Half::test: out.test.push_back(f.slice(begin, end)); break;
        case Half::drop: break;
      }
      begin = end;
    }
  }
  return out;
}

std::vector<ZoneFrame> segment_frames(std::span<const TimeSeries> series, const std::string& zone_id,
                                      std::size_t min_rows) {
  if (series.empty()) throw ValidationError("segment_frames: no series for zone " + zone_id);
  const std::int64_t step = series.front().step_seconds();
  std::int64_t lo = series.front().start().epoch_seconds;
  std::int64_t hi = series.front().end().epoch_seconds;
  for (const TimeSeries& s : series) {
    if (s.step_seconds() != step) throw ValidationError("segment_frames: mixed steps in zone " + zone_id);
    if ((s.start().epoch_seconds - series.front().start().epoch_seconds) % step != 0) {
      throw ValidationError("segment_frames: series " + s.device_id() + " is off the common grid");
    }
    lo = std::max(lo, s.start().epoch_seconds);
    hi = std::min(hi, s.end().epoch_seconds);
  }
  std::vector<ZoneFrame> out;
  if (hi <= lo) return out;
  const auto n = static_cast<std::size_t>((hi - lo) / step);
  std::vector<std::size_t> offsets;
  for (const TimeSeries& s : series) offsets.push_back(static_cast<std::size_t>((lo - s.start().epoch_seconds) / step));

  const auto row_ok = [&](std::size_t r) {
    for (std::size_t k = 0; k < series.size(); ++k) {
      if (is_missing(series[k].values()[offsets[k] + r])) return false;
    }
    return true;
  };
  std::size_t r = 0;
  while (r < n) {
    if (!row_ok(r)) {
      ++r;
      continue;
    }
    std::size_t e = r;
    while (e < n && row_ok(e)) ++e;
    if (e - r >= min_rows) {
      ZoneFrame::Channels ch;
      for (std::size_t k = 0; k < series.size(); ++k) {
        const auto v = series[k].values().subspan(offsets[k] + r, e - r);
        if (!ch.emplace(series[k].kind(), std::vector<double>(v.begin(), v.end())).second) {
          throw ValidationError("segment_frames: duplicate channel " + std::string(to_string(series[k].kind())) +
                                " in zone " + zone_id);
        }
      }
      out.emplace_back(zone_id, step, Timestamp{lo + static_cast<std::int64_t>(r) * step}, std::move(ch));
    }
    r = e;
  }
  return out;
}

std::string format_design_csv(const DesignMatrix& d) {
  std::string out;
  for (const std::string& n : d.feature_names) out += csv::quote(n) + ',';
  out += "target,timestamp\n";
  for (std::size_t i = 0; i < d.n_samples(); ++i) {
    for (double v : d.X.row(i)) out += csv::format_double(v) + ',';
    out += csv::format_double(d.y[i]) + ',' + format_rfc3339(d.sample_timestamps[i]) + '\n';
  }
  return out;
}

}  // namespace zonecast::features
