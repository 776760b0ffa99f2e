#include "zonecast/forecast.hpp"

#include "zonecast/csv.hpp"
#include "zonecast/error.hpp"
#include "zonecast/model_io.hpp"
#include "zonecast/simd/kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>
#include <tuple>

namespace zonecast::forecast {

using nlohmann::json;

namespace {

constexpr std::string_view kBankFormat = "zonecast-bank-v1";
constexpr double kBandLowF = 65.0;
constexpr double kBandHighF = 75.0;

void check_metric_inputs(std::span<const double> pred, std::span<const double> actual) {
  if (pred.empty() || actual.empty()) throw ValidationError("metric: empty input");
  if (pred.size() != actual.size()) {
    throw ValidationError("metric: length mismatch (" + std::to_string(pred.size()) + " vs " +
                          std::to_string(actual.size()) + ")");
  }
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
// (lowest index) is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct Sample {
  std::size_t frame;
  std::size_t row;
};

struct Window {
  std::size_t frame;
  std::size_t start;
  std::size_t length;
};

// Validation samples [b, e) cut into per-frame runs, each chunked into
// windows of at most H steps.
std::vector<Window> fold_windows(std::span<const Sample> samples, std::size_t b, std::size_t e, std::size_t h) {
  std::vector<Window> out;
  std::size_t i = b;
  while (i < e) {
    std::size_t j = i + 1;
    while (j < e && samples[j].frame == samples[i].frame && samples[j].row == samples[j - 1].row + 1) ++j;
    for (std::size_t k = i; k < j; k += h) out.push_back({samples[i].frame, samples[k].row, std::min(h, j - k)});
    i = j;
  }
  return out;
}

bool spec_less(const RegressorSpec& a, const RegressorSpec& b) {
  return std::tie(a.kind, a.hyper, a.seed) < std::tie(b.kind, b.hyper, b.seed);
}

json config_to_json(const ForecastConfig& c) {
  json ex = json::array();
  for (auto k : c.exogenous) ex.push_back(std::string(to_string(k)));
  return {{"lookback_steps", c.lookback_steps},
          {"horizon_steps", c.horizon_steps},
          {"step_seconds", c.step_seconds},
          {"exogenous", ex}};
}

ForecastConfig config_from_json(const json& j) {
  ForecastConfig c;
  c.lookback_steps = j.at("lookback_steps").get<int>();
  c.horizon_steps = j.at("horizon_steps").get<int>();
  c.step_seconds = j.at("step_seconds").get<std::int64_t>();
  for (const auto& name : j.at("exogenous")) {
    const auto k = parse_measurement_kind(name.get<std::string>());
    if (!k) throw ValidationError("bank: unknown exogenous channel '" + name.get<std::string>() + "'");
    c.exogenous.push_back(*k);
  }
  c.validate();
  return c;
}

std::string json_number(double v) { return std::isfinite(v) ? csv::format_double(v) : "null"; }

}  // namespace

std::vector<Fold> tscv_splits(std::size_t n_samples, const TscvPlan& plan) {
  if (plan.n_folds < 1) throw ValidationError("tscv: n_folds must be >= 1");
  const auto folds = static_cast<std::size_t>(plan.n_folds);
  const std::size_t min_train = plan.min_train_samples == 0 ? n_samples / 2 : plan.min_train_samples;
  const std::size_t required = std::max<std::size_t>(min_train, 1) + folds;
  if (n_samples < required) {
    throw ValidationError("tscv: " + std::to_string(n_samples) + " samples, need at least " +
                          std::to_string(required) + " for " + std::to_string(folds) + " folds after " +
                          std::to_string(min_train) + " training samples");
  }
  const std::size_t block = (n_samples - min_train) / folds;
  std::vector<Fold> out;
  out.reserve(folds);
  for (std::size_t k = 0; k < folds; ++k) {
    const std::size_t train_end = min_train + k * block;
    const std::size_t val_end = k + 1 == folds ? n_samples : train_end + block;
    out.push_back({train_end, val_end});
  }
  return out;
}

double mae(std::span<const double> pred, std::span<const double> actual) {
  check_metric_inputs(pred, actual);
  return simd::sum_abs_diff(pred, actual) / static_cast<double>(pred.size());
}

double rmse(std::span<const double> pred, std::span<const double> actual) {
  check_metric_inputs(pred, actual);
  const double r = std::sqrt(simd::sum_squared_diff(pred, actual) / static_cast<double>(pred.size()));
  // RMSE >= MAE holds exactly; keep it under rounding when all errors are equal.
  return std::max(r, mae(pred, actual));
}

ForecastResult recursive_forecast(const Regressor& model, const ZoneFrame& frame, const ForecastConfig& cfg,
                                  std::size_t start_index, std::size_t horizon) {
  cfg.validate();
  const std::size_t h = horizon == 0 ? static_cast<std::size_t>(cfg.horizon_steps) : horizon;
  const auto lookback = static_cast<std::size_t>(cfg.lookback_steps);
  if (start_index < lookback) {
    throw ValidationError("forecast: start index " + std::to_string(start_index) + " is before the lookback of " +
                          std::to_string(lookback) + " steps");
  }
  if (start_index + h > frame.n_rows()) {
    throw ValidationError("forecast: horizon of " + std::to_string(h) + " steps from row " +
                          std::to_string(start_index) + " exceeds the frame (" + std::to_string(frame.n_rows()) +
                          " rows)");
  }
  if (model.n_features() != cfg.n_features()) {
    throw ValidationError("forecast: model expects " + std::to_string(model.n_features()) +
                          " features, config gives " + std::to_string(cfg.n_features()));
  }
  const auto actual_col = frame.column(MeasurementKind::zone_air_temperature_sensor);
  std::vector<std::span<const double>> exog;
  for (auto k : cfg.exogenous) exog.push_back(frame.column(k));

  // Target buffer: recorded history, then predictions.
  std::vector<double> buf(actual_col.begin(), actual_col.begin() + static_cast<std::ptrdiff_t>(start_index));
  buf.reserve(start_index + h);
  std::vector<double> row(cfg.n_features());
  ForecastResult r;
  r.zone_id = frame.zone_id();
  r.horizon_steps = h;
  for (std::size_t s = 0; s < h; ++s) {
    const std::size_t t = start_index + s;
    buf.push_back(0.0);
    features::fill_row(buf, exog, t, cfg.lookback_steps, row);
    const double p = model.predict_one(row);
    buf.back() = p;
    r.predicted.push_back(p);
    r.actual.push_back(actual_col[t]);
    r.timestamps.push_back(frame.time_at(t));
  }
  r.mae = mae(r.predicted, r.actual);
  r.rmse = rmse(r.predicted, r.actual);
  return r;
}

std::optional<std::size_t> pick_winner(std::span<const CandidateScore> scores) {
  std::optional<std::size_t> winner;
  const auto key = [](const CandidateScore& x) { return std::tie(x.mean_mae, x.mean_rmse); };
  for (std::size_t c = 0; c < scores.size(); ++c) {
    const CandidateScore& cur = scores[c];
    if (!cur.error.empty()) continue;
    if (!winner) {
      winner = c;
      continue;
    }
    const CandidateScore& best = scores[*winner];
    if (key(cur) < key(best) || (key(cur) == key(best) && spec_less(cur.spec, best.spec))) winner = c;
  }
  return winner;
}

BankEntry select_model(std::span<const ZoneFrame> frames, std::span<const RegressorSpec> candidates,
                       const SelectOptions& options) {
  const ForecastConfig& cfg = options.config;
  cfg.validate();
  if (candidates.size() < 2) throw ValidationError("select: need at least 2 candidate models");
  if (frames.empty()) throw ValidationError("select: no training frames");
  for (const auto& c : candidates) c.validate();

  std::vector<const ZoneFrame*> ordered;
  for (const auto& f : frames) {
    if (f.zone_id() != frames[0].zone_id()) throw ValidationError("select: frames belong to different zones");
    if (f.step_seconds() != cfg.step_seconds) {
      throw ValidationError("select: frame step " + std::to_string(f.step_seconds()) + " s differs from config step " +
                            std::to_string(cfg.step_seconds) + " s");
    }
    if (f.n_rows() > static_cast<std::size_t>(cfg.lookback_steps)) ordered.push_back(&f);
  }
  if (ordered.empty()) {
    throw ValidationError("select: every frame of zone '" + frames[0].zone_id() +
                          "' is too short for the lookback (need at least L+1 rows)");
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const ZoneFrame* a, const ZoneFrame* b) { return a->start() < b->start(); });

  features::DesignMatrix pooled;
  std::vector<Sample> samples;
  for (std::size_t fi = 0; fi < ordered.size(); ++fi) {
    const auto d = features::build_design(*ordered[fi], cfg);
    if (fi == 0) {
      pooled = d;
    } else {
      pooled.append(d);
    }
    for (std::size_t t = static_cast<std::size_t>(cfg.lookback_steps); t < ordered[fi]->n_rows(); ++t) {
      samples.push_back({fi, t});
    }
  }
  const auto folds = tscv_splits(pooled.n_samples(), options.plan);
  const auto h = static_cast<std::size_t>(cfg.horizon_steps);

  struct TaskResult {
    double mae = 0.0;
    double rmse = 0.0;
    std::string error;
  };
  const std::size_t n_tasks = candidates.size() * folds.size();
  std::vector<TaskResult> results(n_tasks);
  parallel_for(n_tasks, options.jobs, [&](std::size_t task) {
    const std::size_t c = task / folds.size();
    const Fold& fold = folds[task % folds.size()];
    TaskResult& out = results[task];
    try {
      std::vector<std::size_t> idx(fold.train_end);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      const auto X = pooled.X.take_rows(idx);
      const std::span<const double> y(pooled.y.data(), fold.train_end);
      const auto model = regressors::fit(candidates[c], X, y);
      const auto windows = fold_windows(samples, fold.train_end, fold.val_end, h);
      double sum_mae = 0.0;
      double sum_rmse = 0.0;
      for (const auto& w : windows) {
        const auto r = recursive_forecast(*model, *ordered[w.frame], cfg, w.start, w.length);
        sum_mae += r.mae;
        sum_rmse += r.rmse;
      }
      out.mae = sum_mae / static_cast<double>(windows.size());
      out.rmse = sum_rmse / static_cast<double>(windows.size());
      if (!std::isfinite(out.mae) || !std::isfinite(out.rmse)) out.error = "non-finite forecast error";
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });

  BankEntry entry;
  entry.zone_id = frames[0].zone_id();
  entry.step_seconds = cfg.step_seconds;
  entry.config = cfg;
  std::string causes;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    CandidateScore s;
    s.spec = candidates[c];
    for (std::size_t k = 0; k < folds.size(); ++k) {
      const TaskResult& r = results[c * folds.size() + k];
      if (!r.error.empty() && s.error.empty()) s.error = "fold " + std::to_string(k) + ": " + r.error;
      s.fold_mae.push_back(r.mae);
      s.fold_rmse.push_back(r.rmse);
    }
    if (s.error.empty()) {
      s.mean_mae = std::accumulate(s.fold_mae.begin(), s.fold_mae.end(), 0.0) / static_cast<double>(folds.size());
      s.mean_rmse = std::accumulate(s.fold_rmse.begin(), s.fold_rmse.end(), 0.0) / static_cast<double>(folds.size());
    } else {
      s.mean_mae = s.mean_rmse = std::numeric_limits<double>::quiet_NaN();
      causes += "\n  " + std::string(to_string(s.spec.kind)) + ": " + s.error;
    }
    entry.scores.push_back(std::move(s));
  }
  const auto winner = pick_winner(entry.scores);
  if (!winner) throw ValidationError("select: all candidates failed for zone '" + entry.zone_id + "':" + causes);

  entry.spec = candidates[*winner];
  entry.model = regressors::fit(entry.spec, pooled.X, pooled.y);
  return entry;
}

void save_bank(const std::filesystem::path& dir, const ModelBank& bank) {
  std::filesystem::create_directories(dir);
  json doc;
  doc["format"] = kBankFormat;
  doc["entries"] = json::array();
  std::size_t i = 0;
  for (const auto& [key, e] : bank) {
    if (!e.model) throw ValidationError("bank: entry for zone '" + e.zone_id + "' has no model");
    const std::string file = "model_" + std::to_string(i++) + ".json";
    model_io::save_model(dir / file, *e.model);
    json scores = json::array();
    for (const auto& s : e.scores) {
      json fm = json::array();
      json fr = json::array();
      for (double v : s.fold_mae) fm.push_back(std::isfinite(v) ? json(v) : json(nullptr));
      for (double v : s.fold_rmse) fr.push_back(std::isfinite(v) ? json(v) : json(nullptr));
      scores.push_back({{"spec", model_io::spec_to_json(s.spec)},
                        {"fold_mae", fm},
                        {"fold_rmse", fr},
                        {"mean_mae", std::isfinite(s.mean_mae) ? json(s.mean_mae) : json(nullptr)},
                        {"mean_rmse", std::isfinite(s.mean_rmse) ? json(s.mean_rmse) : json(nullptr)},
                        {"error", s.error}});
    }
    doc["entries"].push_back({{"zone_id", e.zone_id},
                              {"step_seconds", e.step_seconds},
                              {"config", config_to_json(e.config)},
                              {"spec", model_io::spec_to_json(e.spec)},
                              {"model_file", file},
                              {"scores", scores}});
  }
  csv::write_file(dir / "bank.json", doc.dump(1) + "\n");
}

ModelBank load_bank(const std::filesystem::path& dir) {
  const auto index = dir / "bank.json";
  if (!std::filesystem::exists(index)) {
    throw ValidationError("model store " + dir.string() + " not found (missing " + index.string() +
                          "); run `zonecast train` first");
  }
  ModelBank bank;
  try {
    const json doc = json::parse(csv::read_file(index));
    if (doc.at("format").get<std::string>() != kBankFormat) {
      throw ValidationError("model store " + dir.string() + ": unsupported format");
    }
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    const auto num = [nan](const json& v) { return v.is_null() ? nan : v.get<double>(); };
    for (const auto& j : doc.at("entries")) {
      BankEntry e;
      e.zone_id = j.at("zone_id").get<std::string>();
      e.step_seconds = j.at("step_seconds").get<std::int64_t>();
      e.config = config_from_json(j.at("config"));
      e.spec = model_io::spec_from_json(j.at("spec"));
      const auto file = j.at("model_file").get<std::string>();
      if (file.find('/') != std::string::npos || file.find("..") != std::string::npos) {
        throw ValidationError("model store " + dir.string() + ": bad model file name '" + file + "'");
      }
      e.model = model_io::load_model(dir / file);
      if (e.model->n_features() != e.config.n_features()) {
        throw ValidationError("model store " + dir.string() + ": model " + file + " does not match its config");
      }
      for (const auto& s : j.at("scores")) {
        CandidateScore c;
        c.spec = model_io::spec_from_json(s.at("spec"));
        for (const auto& v : s.at("fold_mae")) c.fold_mae.push_back(num(v));
        for (const auto& v : s.at("fold_rmse")) c.fold_rmse.push_back(num(v));
        c.mean_mae = num(s.at("mean_mae"));
        c.mean_rmse = num(s.at("mean_rmse"));
        c.error = s.at("error").get<std::string>();
        e.scores.push_back(std::move(c));
      }
      auto key = std::make_pair(e.zone_id, e.step_seconds);
      if (!bank.emplace(std::move(key), std::move(e)).second) {
        throw ValidationError("model store " + dir.string() + ": duplicate entry");
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError("model store " + dir.string() + ": malformed index: " + e.what());
  }
  return bank;
}

EvalReport evaluate_bank(const ModelBank& bank, const std::map<std::string, std::vector<ZoneFrame>>& frames,
                         std::int64_t step_seconds) {
  EvalReport rep;
  double pooled_abs = 0.0;
  double pooled_sq = 0.0;
  std::size_t pooled_n = 0;
  for (const auto& [zone, zone_frames] : frames) {
    const auto it = bank.find({zone, step_seconds});
    if (it == bank.end()) {
      rep.missing_zones.push_back(zone);
      continue;
    }
    const BankEntry& e = it->second;
    const auto lookback = static_cast<std::size_t>(e.config.lookback_steps);
    const auto h = static_cast<std::size_t>(e.config.horizon_steps);
    ZoneSummary z;
    z.zone_id = zone;
    z.min_temp = std::numeric_limits<double>::infinity();
    z.max_temp = -std::numeric_limits<double>::infinity();
    for (const auto& f : zone_frames) {
      const auto temps = f.column(MeasurementKind::zone_air_temperature_sensor);
      for (double v : temps) {
        z.min_temp = std::min(z.min_temp, v);
        z.max_temp = std::max(z.max_temp, v);
      }
      for (std::size_t s = lookback; s + h <= f.n_rows(); s += h) {
        auto r = recursive_forecast(*e.model, f, e.config, s, h);
        rep.windows.push_back({zone, step_seconds, std::string(to_string(e.spec.kind)), f.time_at(s), r.mae, r.rmse});
        z.mean_mae += r.mae;
        z.mean_rmse += r.rmse;
        ++z.n_windows;
        for (std::size_t i = 0; i < r.predicted.size(); ++i) {
          const double d = r.predicted[i] - r.actual[i];
          pooled_abs += std::fabs(d);
          pooled_sq += d * d;
        }
        pooled_n += r.predicted.size();
        rep.traces.push_back(std::move(r));
      }
    }
    if (z.n_windows > 0) {
      z.mean_mae /= static_cast<double>(z.n_windows);
      z.mean_rmse /= static_cast<double>(z.n_windows);
    } else {
      z.mean_mae = z.mean_rmse = std::numeric_limits<double>::quiet_NaN();
    }
    z.outside_band = z.min_temp < kBandLowF || z.max_temp > kBandHighF;
    rep.zones.push_back(z);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (rep.windows.empty()) {
    rep.mean_mae_windows = rep.mean_rmse_windows = rep.mean_mae_zones = rep.mean_rmse_zones = nan;
    rep.pooled_mae = rep.pooled_rmse = nan;
    return rep;
  }
  for (const auto& w : rep.windows) {
    rep.mean_mae_windows += w.mae;
    rep.mean_rmse_windows += w.rmse;
  }
  rep.mean_mae_windows /= static_cast<double>(rep.windows.size());
  rep.mean_rmse_windows /= static_cast<double>(rep.windows.size());
  std::size_t nz = 0;
  for (const auto& z : rep.zones) {
    if (z.n_windows == 0) continue;
    rep.mean_mae_zones += z.mean_mae;
    rep.mean_rmse_zones += z.mean_rmse;
    ++nz;
  }
  rep.mean_mae_zones /= static_cast<double>(nz);
  rep.mean_rmse_zones /= static_cast<double>(nz);
  rep.pooled_mae = pooled_abs / static_cast<double>(pooled_n);
  rep.pooled_rmse = std::sqrt(pooled_sq / static_cast<double>(pooled_n));
  return rep;
}

std::string format_eval_csv(const EvalReport& report) {
  std::string out = "zone_id,step_seconds,model_kind,window_start,mae_f,rmse_f\n";
  for (const auto& w : report.windows) {
    out += csv::quote(w.zone_id) + ',' + std::to_string(w.step_seconds) + ',' + w.model_kind + ',' +
           format_rfc3339(w.window_start) + ',' + csv::format_double(w.mae) + ',' + csv::format_double(w.rmse) +
           '\n';
  }
  return out;
}

std::string format_eval_summary(const EvalReport& report) {
  // Hand-assembled so numbers use the same shortest round-trip form as the CSVs.
  std::string out = "{\n";
  out += "  \"n_windows\": " + std::to_string(report.windows.size()) + ",\n";
  out += "  \"mean_mae_f_over_windows\": " + json_number(report.mean_mae_windows) + ",\n";
  out += "  \"mean_rmse_f_over_windows\": " + json_number(report.mean_rmse_windows) + ",\n";
  out += "  \"mean_mae_f_over_zones\": " + json_number(report.mean_mae_zones) + ",\n";
  out += "  \"mean_rmse_f_over_zones\": " + json_number(report.mean_rmse_zones) + ",\n";
  out += "  \"pooled_mae_f\": " + json_number(report.pooled_mae) + ",\n";
  out += "  \"pooled_rmse_f\": " + json_number(report.pooled_rmse) + ",\n";
  out += "  \"zones\": [";
  for (std::size_t i = 0; i < report.zones.size(); ++i) {
    const auto& z = report.zones[i];
    out += i ? ",\n" : "\n";
    out += "    {\"zone_id\": " + json(z.zone_id).dump() + ", \"n_windows\": " + std::to_string(z.n_windows) +
           ", \"mean_mae_f\": " + json_number(z.mean_mae) + ", \"mean_rmse_f\": " + json_number(z.mean_rmse) +
           ", \"min_temp_f\": " + json_number(z.min_temp) + ", \"max_temp_f\": " + json_number(z.max_temp) +
           ", \"outside_65_75_f\": " + (z.outside_band ? "true" : "false") + "}";
  }
  out += report.zones.empty() ? "],\n" : "\n  ],\n";
  out += "  \"missing_zones\": [";
  for (std::size_t i = 0; i < report.missing_zones.size(); ++i) {
    out += (i ? ", " : "") + json(report.missing_zones[i]).dump();
  }
  out += "]\n}\n";
  return out;
}

std::string format_trace_csv(const ForecastResult& r) {
  std::string out = "timestamp,actual_f,predicted_f\n";
  for (std::size_t i = 0; i < r.predicted.size(); ++i) {
    out += format_rfc3339(r.timestamps[i]) + ',' + csv::format_double(r.actual[i]) + ',' +
           csv::format_double(r.predicted[i]) + '\n';
  }
  return out;
}

}  // namespace zonecast::forecast
