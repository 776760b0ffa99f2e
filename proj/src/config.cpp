#include "zonecast/config.hpp"

#include "zonecast/csv.hpp"
#include "zonecast/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <functional>
#include <type_traits>

namespace zonecast::config {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& where, const std::string& value, const char* what) {
  throw ValidationError(where + ": '" + value + "' is not " + what);
}

long long to_int(const std::string& where, const std::string& v) {
  const auto x = csv::parse_int(v);
  if (!x) bad_value(where, v, "an integer");
  return *x;
}

double to_double(const std::string& where, const std::string& v) {
  const auto x = csv::parse_double(v);
  if (!x) bad_value(where, v, "a number");
  return *x;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    const auto end = std::min(v.find(',', pos), v.size());
    const auto item = trim(std::string_view(v).substr(pos, end - pos));
    if (!item.empty()) out.push_back(item);
    pos = end + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ',';
    out += s;
  }
  return out;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string& where, const std::string& value)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define ZC_INT(KEY, EXPR)                                                                             \
  Field {                                                                                             \
    KEY, [](RunConfig& c, const std::string& w, const std::string& v) { EXPR = to_int(w, v); },     \
        [](const RunConfig& c) { return std::to_string(EXPR); }                                       \
  }
#define ZC_UINT(KEY, EXPR)                                                                            \
  Field {                                                                                             \
    KEY, [](RunConfig& c, const std::string& w, const std::string& v) {                              \
      const long long x = to_int(w, v);                                                               \
      if (x < 0) bad_value(w, v, "a non-negative integer");                                           \
      EXPR = static_cast<std::remove_reference_t<decltype(EXPR)>>(x);                                 \
    },                                                                                                \
        [](const RunConfig& c) { return std::to_string(EXPR); }                                       \
  }
#define ZC_DOUBLE(KEY, EXPR)                                                                          \
  Field {                                                                                             \
    KEY, [](RunConfig& c, const std::string& w, const std::string& v) { EXPR = to_double(w, v); },  \
        [](const RunConfig& c) { return csv::format_double(EXPR); }                                   \
  }
#define ZC_PATH(KEY, EXPR)                                                                            \
  Field {                                                                                             \
    KEY, [](RunConfig& c, const std::string&, const std::string& v) { EXPR = v; },                   \
        [](const RunConfig& c) { return (EXPR).string(); }                                            \
  }
#define ZC_TIME(KEY, EXPR)                                                                            \
  Field {                                                                                             \
    KEY, [](RunConfig& c, const std::string& w, const std::string& v) {                              \
      try {                                                                                           \
        EXPR = parse_rfc3339(v);                                                                      \
      } catch (const ValidationError& e) {                                                            \
        throw ValidationError(w + ": " + e.what());                                                   \
      }                                                                                               \
    },                                                                                                \
        [](const RunConfig& c) { return format_rfc3339(EXPR); }                                       \
  }

const std::vector<std::pair<std::string, std::vector<Field>>>& registry() {
  static const std::vector<std::pair<std::string, std::vector<Field>>> r = {
      {"paths",
       {ZC_PATH("data_dir", c.paths.data_dir), ZC_PATH("work_dir", c.paths.work_dir),
        ZC_PATH("model_store", c.paths.model_store), ZC_PATH("output_dir", c.paths.output_dir),
        ZC_PATH("tariff", c.paths.tariff)}},
      {"run", {ZC_UINT("seed", c.seed), ZC_UINT("jobs", c.jobs)}},
      {"simulate",
       {ZC_INT("n_zones", c.simulate.n_zones), ZC_INT("months", c.simulate.months),
        ZC_TIME("start", c.simulate.start), ZC_INT("step_seconds", c.simulate.step_seconds),
        ZC_DOUBLE("sensor_noise_std", c.simulate.sensor_noise_std),
        ZC_DOUBLE("initial_temp_c", c.simulate.initial_temp)}},
      {"preprocess",
       {ZC_INT("max_gap_steps", c.preprocess.max_gap_steps), ZC_INT("mad_window", c.preprocess.mad_window),
        ZC_DOUBLE("mad_k", c.preprocess.mad_k), ZC_INT("target_step_seconds", c.preprocess.target_step_seconds)}},
      {"features",
       {ZC_INT("lookback_steps", c.lookback_steps), ZC_INT("horizon_steps", c.horizon_steps),
        Field{"exogenous",
              [](RunConfig& c, const std::string& w, const std::string& v) {
                c.exogenous.clear();
                for (const auto& name : split_list(v)) {
                  const auto k = parse_measurement_kind(name);
                  if (!k) bad_value(w, name, "a measurement kind");
                  c.exogenous.push_back(*k);
                }
              },
              [](const RunConfig& c) {
                std::vector<std::string> names;
                for (auto k : c.exogenous) names.emplace_back(to_string(k));
                return join(names);
              }}}},
      {"select",
       {ZC_INT("n_folds", c.plan.n_folds), ZC_UINT("min_train_samples", c.plan.min_train_samples),
        Field{"candidates",
              [](RunConfig& c, const std::string& w, const std::string& v) {
                c.candidates.clear();
                for (const auto& name : split_list(v)) {
                  const auto k = regressors::parse_regressor_kind(name);
                  if (!k) bad_value(w, name, "a regressor kind");
                  c.candidates.push_back(*k);
                }
              },
              [](const RunConfig& c) {
                std::vector<std::string> names;
                for (auto k : c.candidates) names.emplace_back(regressors::to_string(k));
                return join(names);
              }}}},
      {"mpc",
       {ZC_TIME("start", c.mpc.start), ZC_INT("total_hours", c.mpc.total_hours),
        ZC_INT("horizon_hours", c.mpc.config.horizon_hours),
        ZC_DOUBLE("comfort_center_c", c.mpc.config.comfort_center_c),
        ZC_DOUBLE("comfort_band_c", c.mpc.config.comfort_band_c),
        ZC_DOUBLE("lambda_comfort", c.mpc.config.lambda_comfort),
        ZC_DOUBLE("lambda_smooth", c.mpc.config.lambda_smooth),
        ZC_INT("inner_step_seconds", c.mpc.config.inner_step_seconds),
        ZC_DOUBLE("supply_temp_min_c", c.mpc.config.bounds.t_lo),
        ZC_DOUBLE("supply_temp_max_c", c.mpc.config.bounds.t_hi),
        ZC_DOUBLE("pressure_min_pa", c.mpc.config.bounds.p_lo),
        ZC_DOUBLE("pressure_max_pa", c.mpc.config.bounds.p_hi), ZC_INT("max_sweeps", c.mpc.config.max_sweeps),
        ZC_DOUBLE("sweep_tol", c.mpc.config.sweep_tol), ZC_INT("scan_points", c.mpc.config.scan_points),
        ZC_DOUBLE("plan_margin_c", c.mpc.config.plan_margin_c), ZC_DOUBLE("vav_setpoint_c", c.mpc.vav_setpoint_c),
        ZC_DOUBLE("base_price", c.mpc.base_price), ZC_DOUBLE("spike_factor", c.mpc.spike_factor),
        ZC_INT("spike_start_hour", c.mpc.spike_start_hour), ZC_INT("spike_end_hour", c.mpc.spike_end_hour),
        ZC_INT("tariff_hours", c.mpc.tariff_hours)}},
  };
  return r;
}

#undef ZC_INT
#undef ZC_UINT
#undef ZC_DOUBLE
#undef ZC_PATH
#undef ZC_TIME

constexpr std::string_view kRegressorPrefix = "regressor.";

}  // namespace

features::ForecastConfig RunConfig::forecast_config() const {
  auto c = features::ForecastConfig::defaults(step_seconds());
  if (lookback_steps > 0) c.lookback_steps = lookback_steps;
  if (horizon_steps > 0) c.horizon_steps = horizon_steps;
  c.exogenous = exogenous;
  return c;
}

std::vector<regressors::RegressorSpec> RunConfig::candidate_specs() const {
  std::vector<regressors::RegressorSpec> out;
  for (auto k : candidates) {
    auto spec = regressors::RegressorSpec::defaults(k, seed);
    if (const auto it = hyper.find(k); it != hyper.end()) {
      for (const auto& [key, v] : it->second) spec.set(key, v);
    }
    out.push_back(std::move(spec));
  }
  return out;
}

mpc::TariffSchedule RunConfig::builtin_tariff() const {
  mpc::TariffSchedule t;
  t.start = mpc.start;
  for (int h = 0; h < mpc.tariff_hours; ++h) {
    const auto hour = (seconds_of_day(mpc.start) / 3600 + h) % 24;
    const bool spike = hour >= mpc.spike_start_hour && hour < mpc.spike_end_hour;
    t.prices.push_back(spike ? mpc.base_price * mpc.spike_factor : mpc.base_price);
  }
  return t;
}

mpc::Building RunConfig::building() const {
  auto b = mpc::Building::synthetic(simulate.n_zones);
  b.vav_setpoint_c = mpc.vav_setpoint_c;
  return b;
}

void RunConfig::validate() const {
  auto sim = simulate;
  sim.validate();
  preprocess.validate();
  forecast_config().validate();
  if (plan.n_folds < 1) throw ValidationError("select.n_folds must be >= 1");
  if (candidates.empty()) throw ValidationError("select.candidates is empty");
  for (const auto& s : candidate_specs()) s.validate();
  mpc.config.validate();
  if (mpc.total_hours < 1) throw ValidationError("mpc.total_hours must be >= 1");
  if (mpc.tariff_hours < mpc.total_hours) throw ValidationError("mpc.tariff_hours must be >= mpc.total_hours");
  if (mpc.start.epoch_seconds % 3600 != 0) throw ValidationError("mpc.start must be on the hour");
  if (!(mpc.base_price >= 0.0) || !(mpc.spike_factor >= 0.0)) {
    throw ValidationError("mpc.base_price and mpc.spike_factor must be >= 0");
  }
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [section, fields] : registry()) {
    out += "[" + section + "]\n";
    for (const auto& f : fields) out += f.key + " = " + f.get(*this) + "\n";
  }
  for (auto k : regressors::kAllRegressorKinds) {
    auto spec = regressors::RegressorSpec::defaults(k);
    if (const auto it = hyper.find(k); it != hyper.end()) {
      for (const auto& [key, v] : it->second) spec.set(key, v);
    }
    out += "[" + std::string(kRegressorPrefix) + std::string(regressors::to_string(k)) + "]\n";
    for (const auto& [key, v] : spec.hyper) out += key + " = " + csv::format_double(v) + "\n";
  }
  return out;
}

std::string RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_text()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RawConfig parse_text(std::string_view text, std::string_view source) {
  RawConfig out;
  std::string section;
  const std::string src(source);
  csv::for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
    const std::string where = src + ":" + std::to_string(line_no);
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) return;
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(where + ": malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw ValidationError(where + ": empty section name");
      out[section];
      return;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(where + ": expected key = value");
    if (section.empty()) throw ValidationError(where + ": key outside a section");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ValidationError(where + ": empty key");
    if (out[section].contains(key)) throw ValidationError(where + ": duplicate key " + section + "." + key);
    out[section][key] = trim(std::string_view(line).substr(eq + 1));
  });
  return out;
}

RawConfig parse_json(std::string_view text, std::string_view source) {
  const std::string src(source);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(src + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError(src + ": expected an object of sections");
  RawConfig out;
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object()) throw ValidationError(src + ": section '" + section + "' must be an object");
    auto& dst = out[section];
    for (const auto& [key, v] : body.items()) {
      if (v.is_string()) {
        dst[key] = v.get<std::string>();
      } else if (v.is_array()) {
        std::vector<std::string> items;
        for (const auto& e : v) {
          if (!e.is_string()) throw ValidationError(src + ": " + section + "." + key + " must hold strings");
          items.push_back(e.get<std::string>());
        }
        dst[key] = join(items);
      } else if (v.is_number() || v.is_boolean()) {
        dst[key] = v.is_boolean() ? (v.get<bool>() ? "1" : "0") : v.dump();
      } else {
        throw ValidationError(src + ": " + section + "." + key + " has an unsupported value");
      }
    }
  }
  return out;
}

RawConfig parse_any(std::string_view text, std::string_view source) {
  const auto p = text.find_first_not_of(" \t\r\n");
  if (p != std::string_view::npos && text[p] == '{') return parse_json(text, source);
  return parse_text(text, source);
}

RunConfig apply(const RawConfig& raw, RunConfig base) {
  for (const auto& [section, values] : raw) {
    if (section.starts_with(kRegressorPrefix)) {
      const auto name = section.substr(kRegressorPrefix.size());
      const auto kind = regressors::parse_regressor_kind(name);
      if (!kind) throw ValidationError("config: unknown section [" + section + "]");
      auto probe = regressors::RegressorSpec::defaults(*kind);
      for (const auto& [key, v] : values) {
        const double x = to_double("config: " + section + "." + key, v);
        probe.set(key, x);
        base.hyper[*kind][key] = x;
      }
      continue;
    }
    const auto& reg = registry();
    const auto it = std::find_if(reg.begin(), reg.end(), [&](const auto& s) { return s.first == section; });
    if (it == reg.end()) throw ValidationError("config: unknown section [" + section + "]");
    for (const auto& [key, v] : values) {
      const auto f = std::find_if(it->second.begin(), it->second.end(), [&](const Field& x) { return x.key == key; });
      if (f == it->second.end()) throw ValidationError("config: unknown key " + section + "." + key);
      f->set(base, "config: " + section + "." + key, v);
    }
  }
  return base;
}

RunConfig load(const std::filesystem::path& path) {
  return apply(parse_any(csv::read_file(path), path.string()));
}

}  // namespace zonecast::config
