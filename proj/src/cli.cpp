#include "zonecast/cli.hpp"

#include "zonecast/config.hpp"
#include "zonecast/csv.hpp"
#include "zonecast/error.hpp"
#include "zonecast/ingest.hpp"
#include "zonecast/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

namespace zonecast::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Options {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned jobs = 0;
  bool jobs_set = false;
  std::vector<std::string> zones;
  std::int64_t step = 0;
  int horizon_days = 0;
};

struct Run {
  config::RunConfig cfg;
  std::vector<std::string> zones;
  std::ostream& out;
  json timings = json::object();
  std::vector<std::string> outputs;

  template <class Fn>
  auto timed(const std::string& stage, Fn&& fn) {
    const auto t0 = Clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      timings[stage] = std::chrono::duration<double>(Clock::now() - t0).count();
    } else {
      auto r = fn();
      timings[stage] = std::chrono::duration<double>(Clock::now() - t0).count();
      return r;
    }
  }

  void write(const fs::path& path, std::string_view text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    csv::write_file(path, text);
    outputs.push_back(path.string());
  }

  std::int64_t step() const { return cfg.step_seconds(); }
  fs::path clean_dir() const { return cfg.paths.work_dir / ("clean_" + std::to_string(step())); }
  unsigned jobs() const {
    if (cfg.jobs > 0) return cfg.jobs;
    return std::max(1u, std::thread::hardware_concurrency());
  }
};

std::vector<DeviceMeta> read_devices(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("device metadata " + path.string() + " not found");
  return ingest::parse_device_meta(path);
}

void cmd_simulate(Run& r) {
  auto sc = r.cfg.simulate;
  sc.seed = r.cfg.seed;
  const auto data = r.timed("generate", [&] { return plant::generate_synthetic(sc); });
  r.timed("write", [&] {
    r.write(r.cfg.paths.data_dir / "telemetry.csv", ingest::format_long_csv(data.store));
    r.write(r.cfg.paths.data_dir / "devices.csv", ingest::format_device_meta(data.devices));
  });
  r.out << "simulated " << sc.n_zones << " zones, " << data.outside_c.size() << " steps of " << sc.step_seconds
        << " s\n";
}

void cmd_ingest(Run& r) {
  const auto telemetry = r.cfg.paths.data_dir / "telemetry.csv";
  if (!fs::exists(telemetry)) throw ValidationError("telemetry " + telemetry.string() + " not found");
  const auto devices = read_devices(r.cfg.paths.data_dir / "devices.csv");
  const auto parsed = r.timed("parse", [&] { return ingest::parse_long_csv(telemetry); });
  const auto store = r.timed("bucket", [&] { return ingest::build_series(parsed.records, 300); });
  r.timed("write", [&] {
    const auto dir = r.cfg.paths.work_dir / "raw";
    ingest::write_canonical(dir, store);
    r.outputs.push_back(dir.string());
    r.write(r.cfg.paths.work_dir / "devices.csv", ingest::format_device_meta(devices));
  });
  r.out << "ingested " << parsed.data_rows << " rows into " << store.series.size() << " series ("
        << parsed.errors.size() << " malformed, " << parsed.skipped_unknown << " unknown measurement, "
        << store.duplicate_count << " duplicate)\n";
}

void cmd_preprocess(Run& r) {
  const auto raw = r.timed("read", [&] { return ingest::read_canonical(r.cfg.paths.work_dir / "raw"); });
  const auto cleaned = r.timed("clean", [&] { return pipeline::clean_store(raw, r.cfg.preprocess); });
  r.timed("write", [&] {
    ingest::write_canonical(r.clean_dir(), cleaned.store);
    r.outputs.push_back(r.clean_dir().string());
    r.write(r.cfg.paths.work_dir / ("outliers_" + std::to_string(r.step()) + ".csv"),
            preprocess::format_outlier_report(cleaned.reports));
  });
  std::size_t flagged = 0;
  for (const auto& rep : cleaned.reports) flagged += rep.bound_count + rep.mad_count;
  r.out << "cleaned " << cleaned.store.series.size() << " series at " << r.step() << " s, " << flagged
        << " outliers removed\n";
}

struct Inputs {
  ingest::SeriesStore store;
  std::vector<DeviceMeta> devices;
};

Inputs read_clean(Run& r) {
  return r.timed("read", [&] {
    return Inputs{ingest::read_canonical(r.clean_dir()), read_devices(r.cfg.paths.work_dir / "devices.csv")};
  });
}

void cmd_train(Run& r) {
  const auto in = read_clean(r);
  pipeline::TrainOptions opts;
  opts.select.config = r.cfg.forecast_config();
  opts.select.plan = r.cfg.plan;
  opts.select.jobs = r.jobs();
  opts.candidates = r.cfg.candidate_specs();
  opts.zones = r.zones;
  auto fresh = r.timed("select", [&] { return pipeline::train_bank(in.store, in.devices, opts); });
  forecast::ModelBank bank;
  if (fs::exists(r.cfg.paths.model_store / "bank.json")) bank = forecast::load_bank(r.cfg.paths.model_store);
  for (auto& [key, entry] : fresh) bank[key] = std::move(entry);
  r.timed("save", [&] { forecast::save_bank(r.cfg.paths.model_store, bank); });
  r.outputs.push_back(r.cfg.paths.model_store.string());
  for (const auto& [key, entry] : fresh) {
    r.out << key.first << " @ " << key.second << " s: " << regressors::to_string(entry.spec.kind) << "\n";
  }
}

forecast::EvalReport evaluate(Run& r) {
  const auto bank = forecast::load_bank(r.cfg.paths.model_store);
  const auto in = read_clean(r);
  const auto fc = r.cfg.forecast_config();
  const auto frames = pipeline::evaluation_frames(in.store, in.devices, fc, r.zones);
  // The horizon and lookback come from each bank entry's own config.
  return r.timed("evaluate", [&] { return forecast::evaluate_bank(bank, frames, r.step()); });
}

void cmd_evaluate(Run& r) {
  const auto rep = evaluate(r);
  const auto stem = "eval_" + std::to_string(r.step());
  r.write(r.cfg.paths.output_dir / (stem + ".csv"), forecast::format_eval_csv(rep));
  const auto summary = forecast::format_eval_summary(rep);
  r.write(r.cfg.paths.output_dir / (stem + "_summary.json"), summary);
  r.out << summary;
  if (rep.windows.empty()) r.out << "no held-out windows: the data has no second half-year\n";
}

// Concatenated traces of one or more windows, optionally with a zone column.
std::string traces_csv(const std::vector<forecast::ForecastResult>& traces, bool with_zone) {
  std::string out = with_zone ? "zone_id,timestamp,actual_f,predicted_f\n" : "timestamp,actual_f,predicted_f\n";
  for (const auto& t : traces) {
    const std::string body = forecast::format_trace_csv(t);
    std::size_t pos = body.find('\n') + 1;
    while (pos < body.size()) {
      const auto end = body.find('\n', pos);
      if (with_zone) out += csv::quote(t.zone_id) + ',';
      out.append(body, pos, end - pos + 1);
      pos = end + 1;
    }
  }
  return out;
}

void cmd_forecast(Run& r) {
  const auto rep = evaluate(r);
  std::map<std::string, std::vector<forecast::ForecastResult>> by_zone;
  for (const auto& t : rep.traces) by_zone[t.zone_id].push_back(t);
  for (const auto& [zone, traces] : by_zone) {
    r.write(r.cfg.paths.output_dir / ("forecast_" + zone + "_" + std::to_string(r.step()) + ".csv"),
            traces_csv(traces, false));
    r.out << zone << ": " << traces.size() << " windows\n";
  }
  for (const auto& z : rep.missing_zones) r.out << z << ": no model in the store\n";
}

struct MpcRun {
  mpc::TariffSchedule tariff;
  mpc::Trace trace;
  mpc::Baseline baseline;
};

MpcRun run_mpc(Run& r) {
  const auto& m = r.cfg.mpc;
  MpcRun out;
  out.tariff = r.cfg.paths.tariff.empty()
                   ? r.cfg.builtin_tariff()
                   : mpc::parse_tariff_csv(csv::read_file(r.cfg.paths.tariff), r.cfg.paths.tariff.string());
  out.tariff.validate(static_cast<std::size_t>(m.total_hours));
  const auto building = r.cfg.building();
  const mpc::Bounds& bd = m.config.bounds;
  const mpc::State init{out.tariff.start, std::vector<double>(building.zones.size(), m.config.comfort_center_c),
                        {0.5 * (bd.t_lo + bd.t_hi), 0.5 * (bd.p_lo + bd.p_hi)}};
  out.trace = r.timed("mpc", [&] { return mpc::receding_horizon(init, building, out.tariff, m.config, m.total_hours); });
  out.baseline = r.timed("baseline",
                         [&] { return mpc::best_constant(init, building, out.tariff, m.config, m.total_hours); });
  return out;
}

double peak_energy(const mpc::Trace& t, const mpc::TariffSchedule& tariff) {
  const double top = *std::max_element(tariff.prices.begin(), tariff.prices.begin() + static_cast<std::ptrdiff_t>(t.rows.size()));
  double e = 0.0;
  for (const auto& row : t.rows) {
    if (row.price == top) e += row.p_chiller_kw + row.p_fan_kw;
  }
  return e;
}

void cmd_optimize(Run& r) {
  const auto res = run_mpc(r);
  const auto& dir = r.cfg.paths.output_dir;
  r.write(dir / "tariff.csv", mpc::format_tariff_csv(res.tariff));
  r.write(dir / "mpc_trace.csv", mpc::format_trace_csv(res.trace));
  r.write(dir / "mpc_baseline_trace.csv", mpc::format_trace_csv(res.baseline.trace));
  json s;
  s["total_hours"] = res.trace.rows.size();
  s["mpc"] = {{"total_cost", res.trace.total_cost},
              {"violation_hours", res.trace.violation_hours},
              {"peak_price_energy_kwh", peak_energy(res.trace, res.tariff)}};
  s["baseline"] = {{"supply_temp_c", res.baseline.u.supply_temp_c},
                   {"pressure_pa", res.baseline.u.pressure_pa},
                   {"total_cost", res.baseline.trace.total_cost},
                   {"violation_hours", res.baseline.trace.violation_hours},
                   {"peak_price_energy_kwh", peak_energy(res.baseline.trace, res.tariff)}};
  s["cost_reduction"] = 1.0 - res.trace.total_cost / res.baseline.trace.total_cost;
  const auto text = s.dump(2) + "\n";
  r.write(dir / "mpc_summary.json", text);
  r.out << text;
}

void cmd_report(Run& r) {
  const auto rep = evaluate(r);
  const auto dir = r.cfg.paths.output_dir / "report";
  r.write(dir / ("forecast_trace_" + std::to_string(r.step()) + ".csv"), traces_csv(rep.traces, true));
  const auto res = run_mpc(r);
  r.write(dir / "mpc_trace.csv", mpc::format_trace_csv(res.trace));
  r.out << "wrote " << r.outputs.size() << " files to " << dir.string() << "\n";
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  return format_rfc3339(Timestamp{std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count()});
}

void append_manifest(const fs::path& dir, const json& line) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream f(dir / "runs.jsonl", std::ios::app);
  if (f) f << line.dump() << '\n';
}

config::RunConfig resolve_config(const Options& o) {
  std::string path = o.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("ZONECAST_CONFIG"); env && *env) path = env;
  }
  config::RunConfig cfg;
  if (!path.empty()) {
    if (!fs::exists(path)) throw ValidationError("config file " + path + " not found");
    cfg = config::load(path);
  }
  if (o.seed_set) cfg.seed = o.seed;
  if (o.jobs_set) cfg.jobs = o.jobs;
  if (o.step != 0) cfg.preprocess.target_step_seconds = o.step;
  if (o.horizon_days != 0) {
    if (o.horizon_days < 1) throw ValidationError("--horizon-days must be >= 1");
    cfg.horizon_steps = static_cast<int>(o.horizon_days * 86400 / cfg.step_seconds());
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"zonecast: zone air temperature forecasting and tariff-aware AHU setpoint optimization"};
  app.name("zonecast");
  app.require_subcommand(1, 1);
  Options o;
  app.add_option("--config", o.config_path,
                 "Config file, sectioned `key = value` text or JSON (default: $ZONECAST_CONFIG, else built-in)");
  auto* seed = app.add_option("--seed", o.seed, "Global seed for the generator and the regressors (default 42)");
  auto* jobs = app.add_option("--jobs", o.jobs, "Worker threads for model selection (default: number of processors)")
                   ->check(CLI::PositiveNumber);
  app.fallthrough();

  const auto add_step = [&](CLI::App* sub) {
    sub->add_option("--step", o.step, "Working step in seconds (default 900)")->check(CLI::IsMember({900, 3600}));
  };
  const auto add_zone = [&](CLI::App* sub) {
    sub->add_option("--zone", o.zones, "Restrict to this zone id (repeatable; default: every zone)");
  };
  const auto add_horizon = [&](CLI::App* sub) {
    sub->add_option("--horizon-days", o.horizon_days, "Forecast horizon in days (default 14)")
        ->check(CLI::PositiveNumber);
  };

  std::map<std::string, std::function<void(Run&)>> commands;
  const auto command = [&](const std::string& name, const std::string& help, std::function<void(Run&)> fn) {
    commands[name] = std::move(fn);
    return app.add_subcommand(name, help);
  };
  command("simulate", "Generate synthetic building telemetry into data_dir", cmd_simulate);
  command("ingest", "Parse data_dir telemetry and devices into the canonical store", cmd_ingest);
  add_step(command("preprocess", "Clean the canonical store and downsample to the working step", cmd_preprocess));
  for (const auto& [name, help, fn] :
       std::vector<std::tuple<std::string, std::string, std::function<void(Run&)>>>{
           {"train", "Select and fit one model per zone and step into the model store", cmd_train},
           {"evaluate", "Recursive forecasts over held-out data; metrics CSV and summary JSON", cmd_evaluate},
           {"forecast", "Write held-out forecast traces per zone", cmd_forecast},
           {"report", "Write forecast and MPC trace CSVs for plotting", cmd_report}}) {
    auto* sub = command(name, help, fn);
    add_step(sub);
    add_zone(sub);
    add_horizon(sub);
  }
  command("optimize", "Receding-horizon setpoint optimization against the tariff", cmd_optimize);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "zonecast: " << e.what() << "\nRun with --help for usage.\n";
    return 1;
  }
  o.seed_set = seed->count() > 0;
  o.jobs_set = jobs->count() > 0;
  const std::string name = app.get_subcommands().front()->get_name();

  const auto t0 = Clock::now();
  json line;
  line["command"] = name;
  line["started_utc"] = utc_now();
  fs::path manifest_dir = "out";
  int code = 0;
  try {
    Run r{resolve_config(o), o.zones, out, json::object(), {}};
    manifest_dir = r.cfg.paths.output_dir;
    line["config_hash"] = r.cfg.hash();
    line["seed"] = r.cfg.seed;
    line["step_seconds"] = r.cfg.step_seconds();
    try {
      commands.at(name)(r);
    } catch (...) {
      line["timings_s"] = r.timings;
      throw;
    }
    line["timings_s"] = r.timings;
    line["outputs"] = r.outputs;
  } catch (const ValidationError& e) {
    err << "zonecast " << name << ": " << e.what() << "\n";
    line["error"] = e.what();
    code = 1;
  } catch (const std::exception& e) {
    err << "zonecast " << name << ": internal error: " << e.what() << "\n";
    line["error"] = e.what();
    code = 2;
  }
  line["exit_code"] = code;
  line["total_s"] = std::chrono::duration<double>(Clock::now() - t0).count();
  append_manifest(manifest_dir, line);
  return code;
}

}  // namespace zonecast::cli
