#pragma once

// Run configuration for the command-line tool.
//
// Text form, one `key = value` per line under `[section]` headers; `#`
// starts a comment. JSON form: an object of section objects. Sections:
//
//   [paths]       data_dir, work_dir, model_store, output_dir, tariff
//   [run]         seed, jobs
//   [simulate]    n_zones, months, start, step_seconds, sensor_noise_std, initial_temp_c
//   [preprocess]  max_gap_steps, mad_window, mad_k, target_step_seconds
//   [features]    lookback_steps, horizon_steps, exogenous
//   [select]      n_folds, min_train_samples, candidates
//   [regressor.KIND]  hyperparameters of one regressor kind
//   [mpc]         see MpcSection
//
// Unknown sections and keys are rejected.

#include "zonecast/features.hpp"
#include "zonecast/forecast.hpp"
#include "zonecast/mpc.hpp"
#include "zonecast/plant.hpp"
#include "zonecast/preprocess.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace zonecast::config {

struct Paths {
  std::filesystem::path data_dir = "data";
  std::filesystem::path work_dir = "work";
  std::filesystem::path model_store = "models";
  std::filesystem::path output_dir = "out";
  std::filesystem::path tariff;  // empty: built-in spike tariff
};

struct MpcSection {
  mpc::MpcConfig config;
  Timestamp start = make_utc(2022, 7, 12);
  int total_hours = 24;
  double vav_setpoint_c = mpc::Building{}.vav_setpoint_c;
  // Built-in tariff: base price with a multiplied window each day.
  double base_price = 0.15;
  double spike_factor = 2.0;
  int spike_start_hour = 12;
  int spike_end_hour = 16;
  int tariff_hours = 48;
};

struct RunConfig {
  Paths paths;
  std::uint64_t seed = 42;
  unsigned jobs = 0;  // 0: hardware concurrency
  plant::SyntheticConfig simulate;
  preprocess::PreprocessConfig preprocess;
  int lookback_steps = 0;  // 0: one week of steps
  int horizon_steps = 0;   // 0: two weeks of steps
  std::vector<MeasurementKind> exogenous = features::ForecastConfig::default_exogenous(false);
  forecast::TscvPlan plan;
  std::vector<regressors::RegressorKind> candidates{regressors::kAllRegressorKinds.begin(),
                                                    regressors::kAllRegressorKinds.end()};
  std::map<regressors::RegressorKind, std::map<std::string, double>> hyper;
  MpcSection mpc;

  /// Working step: preprocess.target_step_seconds.
  std::int64_t step_seconds() const { return preprocess.target_step_seconds; }
  features::ForecastConfig forecast_config() const;
  std::vector<regressors::RegressorSpec> candidate_specs() const;
  mpc::TariffSchedule builtin_tariff() const;
  mpc::Building building() const;

  void validate() const;
  /// Canonical text form: every key, sections and keys in a fixed order.
  std::string to_text() const;
  /// FNV-1a 64 of to_text(), hex.
  std::string hash() const;
};

/// Section -> key -> raw value.
using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

RawConfig parse_text(std::string_view text, std::string_view source = "<memory>");
RawConfig parse_json(std::string_view text, std::string_view source = "<memory>");
/// JSON if the first non-space character is '{', text otherwise.
RawConfig parse_any(std::string_view text, std::string_view source = "<memory>");

/// Applies raw values over `base`; throws ValidationError naming unknown
/// sections or keys and malformed values.
RunConfig apply(const RawConfig& raw, RunConfig base = {});

RunConfig load(const std::filesystem::path& path);

}  // namespace zonecast::config
