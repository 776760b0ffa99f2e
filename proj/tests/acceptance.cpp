// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include "oracles.hpp"
#include "zonecast/cli.hpp"
#include "zonecast/csv.hpp"
#include "zonecast/error.hpp"
#include "zonecast/forecast.hpp"
#include "zonecast/model_io.hpp"
#include "zonecast/mpc.hpp"
#include "zonecast/pipeline.hpp"
#include "zonecast/plant.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace zonecast;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

// ---- 1 and 10: synthetic building through the command-line tool ----

struct PipelineRun {
  fs::path dir;
  bool ok = false;
  std::string error;
  double seconds = 0.0;
};

PipelineRun run_pipeline(const std::string& name) {
  PipelineRun r;
  r.dir = fs::temp_directory_path() / ("zonecast_acceptance_" + name);
  fs::remove_all(r.dir);
  fs::create_directories(r.dir);
  const auto cfg = r.dir / "run.cfg";
  csv::write_file(cfg, "[paths]\n"
                       "data_dir = " + (r.dir / "data").string() + "\n"
                       "work_dir = " + (r.dir / "work").string() + "\n"
                       "model_store = " + (r.dir / "models").string() + "\n"
                       "output_dir = " + (r.dir / "out").string() + "\n"
                       "[run]\nseed = 42\n"
                       "[simulate]\nn_zones = 3\nmonths = 8\nstep_seconds = 300\n"
                       "[preprocess]\ntarget_step_seconds = 900\n"
                       "[features]\nlookback_steps = 4\n"
                       "[select]\nn_folds = 5\n"
                       "candidates = RANDOM_FOREST,GP,ADABOOST_R2,GRADIENT_BOOSTING,XGB_STYLE\n"
                       "[regressor.GP]\nmax_samples = 500\n");
  const auto t0 = Clock::now();
  for (const char* cmd : {"simulate", "ingest", "preprocess", "train", "evaluate"}) {
    std::ostringstream out, err;
    if (cli::run({"--config", cfg.string(), cmd}, out, err) != 0) {
      r.error = std::string(cmd) + ": " + err.str();
      return r;
    }
  }
  r.seconds = seconds_since(t0);
  r.ok = true;
  return r;
}

Outcome criterion_1(const PipelineRun& run) {
  if (!run.ok) return {false, run.error};
  const auto s = nlohmann::json::parse(csv::read_file(run.dir / "out" / "eval_900_summary.json"));
  if (s["n_windows"].get<int>() == 0) return {false, "no held-out windows"};
  const double mae = s["pooled_mae_f"].get<double>();
  const double rmse = s["pooled_rmse_f"].get<double>();
  // Every zone must have scored all five kinds.
  const auto bank = forecast::load_bank(run.dir / "models");
  std::string kinds_note;
  bool all_kinds = bank.size() == 3;
  for (const auto& [key, e] : bank) {
    std::set<regressors::RegressorKind> seen;
    for (const auto& sc : e.scores) {
      if (sc.error.empty() && std::isfinite(sc.mean_mae)) seen.insert(sc.spec.kind);
    }
    if (seen.size() != 5) all_kinds = false;
    kinds_note += " " + key.first + "=" + std::string(regressors::to_string(e.spec.kind));
  }
  const bool pass = mae <= 1.5 && rmse <= 2.0 && run.seconds <= 300.0 && all_kinds;
  return {pass, "MAE " + fmt(mae) + " F, RMSE " + fmt(rmse) + " F, " + std::to_string(s["n_windows"].get<int>()) +
                    " windows, " + fmt(run.seconds, 3) + " s, winners" + kinds_note +
                    (all_kinds ? "" : " (not every kind scored)")};
}

Outcome criterion_10(const PipelineRun& a, const PipelineRun& b) {
  if (!a.ok || !b.ok) return {false, a.ok ? b.error : a.error};
  const bool same_eval = csv::read_file(a.dir / "out" / "eval_900.csv") == csv::read_file(b.dir / "out" / "eval_900.csv");
  const bool same_summary = csv::read_file(a.dir / "out" / "eval_900_summary.json") ==
                            csv::read_file(b.dir / "out" / "eval_900_summary.json");

  // Every kind, fitted on a real design matrix, through save and load.
  const auto store = ingest::read_canonical(a.dir / "work" / "clean_900");
  const auto devices = ingest::parse_device_meta(a.dir / "work" / "devices.csv");
  auto fc = features::ForecastConfig::defaults(900);
  fc.lookback_steps = 4;
  const auto frames = pipeline::evaluation_frames(store, devices, fc, std::vector<std::string>{"zone_1"});
  const auto design = features::build_design(frames.at("zone_1").front(), fc);
  const std::size_t n = std::min<std::size_t>(design.n_samples(), 600);
  regressors::Matrix X(n, design.X.cols());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < X.cols(); ++j) X(i, j) = design.X(i, j);
  }
  const std::vector<double> y(design.y.begin(), design.y.begin() + static_cast<std::ptrdiff_t>(n));
  const auto dir = a.dir / "roundtrip";
  fs::create_directories(dir);
  double worst = 0.0;
  for (auto kind : regressors::kAllRegressorKinds) {
    auto spec = regressors::RegressorSpec::defaults(kind, 42);
    if (kind == regressors::RegressorKind::GP) spec.set("max_samples", 300);
    const auto model = regressors::fit(spec, X, y);
    const auto path = dir / (std::string(regressors::to_string(kind)) + ".json");
    model_io::save_model(path, *model);
    const auto back = model_io::load_model(path);
    const auto p0 = model->predict(design.X);
    const auto p1 = back->predict(design.X);
    for (std::size_t i = 0; i < p0.size(); ++i) worst = std::max(worst, std::fabs(p0[i] - p1[i]));
  }
  return {same_eval && same_summary && worst <= 1e-12,
          std::string("metric CSV ") + (same_eval ? "identical" : "DIFFERS") + ", summary " +
              (same_summary ? "identical" : "DIFFERS") + ", save/load max |dp| " + fmt(worst, 3) + " over " +
              std::to_string(design.n_samples()) + " rows x 5 kinds"};
}

// ---- 2: depth-1 tree against exhaustive enumeration ----

Outcome criterion_2() {
  std::mt19937_64 gen(20240);
  int bad = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 1 + gen() % 50;
    const std::size_t d = 1 + gen() % 4;
    std::vector<std::vector<long long>> Xi(n, std::vector<long long>(d));
    std::vector<long long> yi(n);
    std::vector<double> flat, y;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < d; ++f) {
        Xi[i][f] = static_cast<long long>(gen() % 15) - 7;
        flat.push_back(static_cast<double>(Xi[i][f]));
      }
      yi[i] = static_cast<long long>(gen() % 101) - 50;
      y.push_back(static_cast<double>(yi[i]));
    }
    const auto t = regressors::tree_fit(regressors::Matrix(n, d, flat), y, 1, 1);
    const auto& root = t.nodes[0];
    const auto got = root.is_leaf() ? oracle::split_sse(Xi, yi, 0, 1e300)
                                    : oracle::split_sse(Xi, yi, static_cast<std::size_t>(root.feature), root.threshold);
    if (!(got == oracle::min_stump_sse(Xi, yi))) ++bad;
  }
  return {bad == 0, std::to_string(200 - bad) + "/200 instances at the exact (rational) minimum SSE"};
}

// ---- 3: boosting hand cases and monotone loss ----

Outcome criterion_3() {
  const regressors::Matrix X(4, 1, std::vector<double>{0, 1, 2, 3});
  const std::vector<double> y{0, 0, 1, 1};
  regressors::BoostParams p;
  p.n_rounds = 1;
  p.tree.max_depth = 1;
  p.tree.min_leaf = 1;
  double err = 0.0;
  p.learning_rate = 1.0;
  const auto full = regressors::gbt_fit(X, y, p);
  for (std::size_t i = 0; i < 4; ++i) err = std::max(err, std::fabs(full.predict_one(X.row(i)) - y[i]));
  p.learning_rate = 0.5;
  const auto half = regressors::gbt_fit(X, y, p);
  const std::vector<double> want{0.25, 0.25, 0.75, 0.75};
  for (std::size_t i = 0; i < 4; ++i) err = std::max(err, std::fabs(half.predict_one(X.row(i)) - want[i]));

  std::mt19937_64 gen(31);
  std::normal_distribution<double> g(0.0, 1.0);
  int increases = 0;
  for (int inst = 0; inst < 5; ++inst) {
    const std::size_t n = 200, d = 3;
    std::vector<double> x(n * d), t(n);
    for (double& v : x) v = g(gen);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::sin(x[i * d]) + x[i * d + 1] * x[i * d + 2] + 0.3 * g(gen);
    regressors::BoostParams q;
    q.n_rounds = 200;
    q.learning_rate = 0.1 + 0.2 * inst;
    q.tree.max_depth = 3;
    q.tree.min_leaf = 2;
    std::vector<double> loss;
    regressors::gbt_fit(regressors::Matrix(n, d, x), t, q, &loss);
    for (std::size_t k = 1; k < loss.size(); ++k) increases += loss[k] > loss[k - 1];
  }
  return {err <= 1e-12 && increases == 0,
          "hand cases max error " + fmt(err, 3) + ", loss increases over 5x200 rounds: " + std::to_string(increases)};
}

// ---- 4: noise-free GP interpolates ----

Outcome criterion_4() {
  std::mt19937_64 gen(41);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.3, 0.7);
  double worst_fit = 0.0, min_var = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 1 + gen() % 200, d = 1 + gen() % 3;
    std::vector<double> x(n * d), y(n);
    for (double& v : x) v = g(gen);
    for (std::size_t i = 0; i < n; ++i) y[i] = std::cos(2.0 * x[i * d]) + 0.5 * x[i * d + d - 1] + 0.1 * g(gen);
    const regressors::Matrix X(n, d, x);
    regressors::GpParams p;
    p.standardize = false;
    p.noise_std = 0.0;
    p.signal_std = 1.0;
    p.length_scale = n > 1 ? oracle::min_pairwise_distance(X) * u(gen) : 1.0;
    const auto m = regressors::gp_fit(X, y, p);
    for (std::size_t i = 0; i < n; ++i) {
      const auto [mean, var] = m.predict_mean_var(X.row(i));
      worst_fit = std::max(worst_fit, std::fabs(mean - y[i]));
      min_var = std::min(min_var, var);
    }
    for (int k = 0; k < 20; ++k) {
      std::vector<double> q(d);
      for (double& v : q) v = 2.0 * g(gen);
      min_var = std::min(min_var, m.predict_mean_var(q).second);
    }
  }
  return {worst_fit <= 1e-6 && min_var >= -1e-10,
          "max |f(x_i) - y_i| " + fmt(worst_fit, 3) + ", min posterior variance " + fmt(min_var, 3)};
}

// ---- 5: metrics ----

Outcome criterion_5() {
  const std::vector<double> p{0, 0}, a{3, 4};
  bool hand = forecast::mae(p, a) == 3.5 && forecast::rmse(p, a) == std::sqrt(12.5) && forecast::mae(a, a) == 0.0 &&
              forecast::rmse(a, a) == 0.0;
  std::mt19937_64 gen(51);
  std::normal_distribution<double> g(0.0, 5.0);
  int bad = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t n = 1 + gen() % 100;
    std::vector<double> x(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = g(gen);
      z[i] = g(gen);
    }
    if (!(forecast::rmse(x, z) >= forecast::mae(x, z))) ++bad;
  }
  return {hand && bad == 0,
          std::string("hand cases ") + (hand ? "exact" : "WRONG") + ", RMSE >= MAE on " + std::to_string(1000 - bad) +
              "/1000 random pairs"};
}

// ---- 6: time-series folds never look ahead ----

Outcome criterion_6() {
  const bool example = forecast::tscv_splits(10, {3, 4}) == std::vector<forecast::Fold>{{4, 6}, {6, 8}, {8, 10}};
  std::mt19937_64 gen(61);
  int plans = 0, leaks = 0;
  for (int inst = 0; inst < 2000; ++inst) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(10, 10000)(gen);
    const int folds = std::uniform_int_distribution<int>(1, 10)(gen);
    const std::size_t min_train =
        inst % 4 == 0 ? 0 : std::uniform_int_distribution<std::size_t>(1, n - static_cast<std::size_t>(folds))(gen);
    std::vector<forecast::Fold> f;
    try {
      f = forecast::tscv_splits(n, {folds, min_train});
    } catch (const ValidationError&) {
      continue;  // default min_train leaves too few samples
    }
    ++plans;
    for (const auto& fold : f) {
      // train = [0, train_end), val = [train_end, val_end)
      if (fold.train_end == 0 || fold.train_end >= fold.val_end || fold.val_end > n) ++leaks;
    }
  }
  return {example && leaks == 0 && plans > 1000,
          std::string("n=10/3 folds ") + (example ? "matches" : "DIFFERS") + ", " + std::to_string(plans) +
              " random plans, violating folds: " + std::to_string(leaks)};
}

// ---- 7: energy balance ----

Outcome criterion_7() {
  plant::PlantParams p;
  std::mt19937_64 gen(71);
  std::uniform_real_distribution<double> q(0.0, 2000.0), tr(5.0, 30.0), mw(0.05, 50.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    p.m_dot_water = mw(gen);
    const double qd = q(gen), t_r = tr(gen);
    worst = std::max(worst, std::fabs(plant::cooling_supply(t_r, plant::supply_temp_from_balance(qd, t_r, p), p) - qd));
  }
  plant::PlantParams h;
  h.m_dot_water = 2.0;
  double hand = 0.0;
  hand = std::max(hand, std::fabs(plant::cooling_demand(std::vector{plant::ZoneThermo{1.0, 24.0, 22.0}}, h) - 2.012));
  hand = std::max(hand, std::fabs(plant::cooling_supply(12.0, 7.0, h) - 41.86));
  hand = std::max(hand, std::fabs((12.0 - plant::supply_temp_from_balance(41.86, 12.0, h)) - 5.0));
  hand = std::max(hand, std::fabs(plant::chiller_power(10.0, 4.0) - 2.5));
  h.fan_coeff = 0.04;
  hand = std::max(hand, std::fabs(plant::ahu_fan_power(250.0, h) - 10.0));
  return {worst < 1e-9 && hand <= 1e-12,
          "round-trip residual " + fmt(worst, 3) + " kW over 1e4 draws, hand cases max error " + fmt(hand, 3)};
}

// ---- 8: optimizer against the 3-level grid ----

Outcome criterion_8() {
  const auto b = mpc::Building::synthetic(3);
  mpc::MpcConfig cfg;
  cfg.horizon_hours = 3;
  const std::vector<double> tl{10.0, 14.0, 18.0}, pl{100.0, 350.0, 600.0};
  std::mt19937_64 gen(81);
  std::uniform_real_distribution<double> tz(20.0, 26.0), pr(0.05, 0.5), ut(10.0, 18.0), up(100.0, 600.0);
  std::uniform_int_distribution<int> hour(0, 24 * 90);
  int ok = 0;
  double worst = -1e300;
  for (int inst = 0; inst < 20; ++inst) {
    const mpc::State s{Timestamp{make_utc(2022, 6, 1).epoch_seconds + 3600LL * hour(gen)},
                       {tz(gen), tz(gen), tz(gen)},
                       {ut(gen), up(gen)}};
    const std::vector<double> prices{pr(gen), pr(gen), pr(gen)};
    const double j_grid = mpc::objective(mpc::grid_oracle(s, b, prices, cfg, tl, pl), s, b, prices, cfg);
    const double j = mpc::optimize(s, b, prices, cfg).j;
    worst = std::max(worst, j - j_grid);
    ok += j <= j_grid + 1e-6;
  }
  return {ok == 20, std::to_string(ok) + "/20 instances, max J - J_grid " + fmt(worst, 3)};
}

// ---- 9: peak shifting ----

Outcome criterion_9() {
  const auto b = mpc::Building::synthetic(3);
  mpc::MpcConfig cfg;
  mpc::TariffSchedule tariff;
  tariff.start = make_utc(2022, 7, 12);
  for (int h = 0; h < 48; ++h) tariff.prices.push_back(h % 24 >= 12 && h % 24 < 16 ? 0.30 : 0.15);
  const mpc::State init{tariff.start, {22.5, 22.5, 22.5}, {14.0, 350.0}};
  const auto t0 = Clock::now();
  const auto base = mpc::best_constant(init, b, tariff, cfg, 24);
  const auto trace = mpc::receding_horizon(init, b, tariff, cfg, 24);
  const auto spike_energy = [](const mpc::Trace& t) {
    double e = 0.0;
    for (const auto& r : t.rows) {
      if (r.price > 0.2) e += r.p_chiller_kw + r.p_fan_kw;
    }
    return e;
  };
  const double e_mpc = spike_energy(trace), e_base = spike_energy(base.trace);
  const double reduction = 1.0 - trace.total_cost / base.trace.total_cost;
  const bool pass = e_mpc < e_base && trace.violation_hours <= base.trace.violation_hours && reduction >= 0.03;
  return {pass, "spike kWh " + fmt(e_mpc) + " vs " + fmt(e_base) + ", violation h " +
                    std::to_string(trace.violation_hours) + " vs " + std::to_string(base.trace.violation_hours) +
                    ", cost " + fmt(trace.total_cost) + " vs " + fmt(base.trace.total_cost) + " (-" +
                    fmt(100.0 * reduction, 3) + "%), " + fmt(seconds_since(t0), 3) + " s"};
}

Outcome guarded(const std::function<Outcome()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main() {
  int failed = 0;
  const auto report = [&](int id, const std::string& title, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << title << ": " << o.detail << std::endl;
    failed += !o.pass;
  };

  const auto a = run_pipeline("a");
  report(1, "end-to-end synthetic forecast", guarded([&] { return criterion_1(a); }));
  report(2, "depth-1 split oracle", guarded(criterion_2));
  report(3, "boosting hand cases and loss", guarded(criterion_3));
  report(4, "GP interpolation", guarded(criterion_4));
  report(5, "metric identities", guarded(criterion_5));
  report(6, "time-series CV leakage", guarded(criterion_6));
  report(7, "energy balance", guarded(criterion_7));
  report(8, "MPC grid oracle", guarded(criterion_8));
  report(9, "peak shifting", guarded(criterion_9));
  const auto b = run_pipeline("b");
  report(10, "determinism", guarded([&] { return criterion_10(a, b); }));

  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
