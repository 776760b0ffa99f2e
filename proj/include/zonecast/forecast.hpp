#pragma once

// Time-series cross-validation, recursive multi-step forecasting, model
// selection per (zone, step) and evaluation of the resulting bank.

#include "zonecast/features.hpp"
#include "zonecast/regressors.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace zonecast::forecast {

using features::ForecastConfig;
using regressors::Regressor;
using regressors::RegressorSpec;

struct TscvPlan {
  int n_folds = 5;
  /// 0 means half of the samples.
  std::size_t min_train_samples = 0;
};

/// Fold k trains on [0, train_end) and validates on [train_end, val_end).
struct Fold {
  std::size_t train_end;
  std::size_t val_end;
  friend bool operator==(const Fold&, const Fold&) = default;
};

/// Expanding-window folds; the last validation block absorbs the remainder.
/// Throws ValidationError naming the required minimum if n is too small.
std::vector<Fold> tscv_splits(std::size_t n_samples, const TscvPlan& plan);

/// Throw ValidationError on empty or unequal inputs.
double mae(std::span<const double> pred, std::span<const double> actual);
double rmse(std::span<const double> pred, std::span<const double> actual);

struct ForecastResult {
  std::string zone_id;
  std::size_t horizon_steps = 0;
  std::vector<Timestamp> timestamps;
  std::vector<double> predicted;
  std::vector<double> actual;
  double mae = 0.0;
  double rmse = 0.0;
};

/// Predicts `horizon` steps from start_index, feeding predictions back as
/// target lags; exogenous inputs are the recorded values. horizon 0 means
/// cfg.horizon_steps.
ForecastResult recursive_forecast(const Regressor& model, const ZoneFrame& frame, const ForecastConfig& cfg,
                                  std::size_t start_index, std::size_t horizon = 0);

struct CandidateScore {
  RegressorSpec spec;
  std::vector<double> fold_mae;
  std::vector<double> fold_rmse;
  double mean_mae = 0.0;
  double mean_rmse = 0.0;
  std::string error;  // non-empty if the candidate failed
};

struct BankEntry {
  std::string zone_id;
  std::int64_t step_seconds = 0;
  ForecastConfig config;
  RegressorSpec spec;
  std::shared_ptr<const Regressor> model;
  std::vector<CandidateScore> scores;
};

/// Index of the winning candidate among those without an error: lowest mean
/// MAE, then lowest mean RMSE, then spec order (kind enum, hyperparameters,
/// seed). nullopt if every candidate failed.
std::optional<std::size_t> pick_winner(std::span<const CandidateScore> scores);

struct SelectOptions {
  TscvPlan plan;
  ForecastConfig config;
  unsigned jobs = 1;
};

/// Pooled time-ordered samples of `frames`; for each fold and candidate the
/// model is fitted on the training prefix and scored by the mean MAE of
/// recursive forecasts over the validation samples, chunked per frame into
/// windows of up to H steps. Winner: lowest mean MAE, then lowest mean RMSE,
/// then spec order. The winner is refitted on all samples.
BankEntry select_model(std::span<const ZoneFrame> frames, std::span<const RegressorSpec> candidates,
                       const SelectOptions& options);

/// Per (zone_id, step_seconds).
using ModelBank = std::map<std::pair<std::string, std::int64_t>, BankEntry>;

void save_bank(const std::filesystem::path& dir, const ModelBank& bank);
/// Throws ValidationError naming the store if it is missing or malformed.
ModelBank load_bank(const std::filesystem::path& dir);

struct WindowMetric {
  std::string zone_id;
  std::int64_t step_seconds;
  std::string model_kind;
  Timestamp window_start;
  double mae;
  double rmse;
};

struct ZoneSummary {
  std::string zone_id;
  std::size_t n_windows = 0;
  double mean_mae = 0.0;
  double mean_rmse = 0.0;
  double min_temp = 0.0;
  double max_temp = 0.0;
  bool outside_band = false;  // left [65, 75] F
};

struct EvalReport {
  std::vector<WindowMetric> windows;
  std::vector<ZoneSummary> zones;
  std::vector<std::string> missing_zones;
  std::vector<ForecastResult> traces;
  double mean_mae_windows = 0.0;  // over all windows
  double mean_rmse_windows = 0.0;
  double mean_mae_zones = 0.0;  // over per-zone means
  double mean_rmse_zones = 0.0;
  double pooled_mae = 0.0;  // over all forecast points
  double pooled_rmse = 0.0;
};

/// Windows of H steps start at L + k*H inside each held-out frame, so their
/// lag history comes from the frame. Zones absent from the bank are listed,
/// not fatal.
EvalReport evaluate_bank(const ModelBank& bank, const std::map<std::string, std::vector<ZoneFrame>>& frames,
                         std::int64_t step_seconds);

/// `zone_id,step_seconds,model_kind,window_start,mae_f,rmse_f`
std::string format_eval_csv(const EvalReport& report);
std::string format_eval_summary(const EvalReport& report);
/// `timestamp,actual_f,predicted_f`
std::string format_trace_csv(const ForecastResult& r);

}  // namespace zonecast::forecast
