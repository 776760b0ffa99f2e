#include "zonecast/plant.hpp"

#include "zonecast/csv.hpp"
#include "zonecast/error.hpp"
#include "zonecast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace zonecast::plant {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

bool finite(double v) { return std::isfinite(v); }

Timestamp add_months(Timestamp t, int months) {
  const CivilDate d = civil_date(t);
  const int total = d.year * 12 + static_cast<int>(d.month) - 1 + months;
  return {make_utc(total / 12, static_cast<unsigned>(total % 12) + 1, d.day).epoch_seconds + seconds_of_day(t)};
}

}  // namespace

void PlantParams::validate() const {
  require(c_p_air > 0.0 && c_p_water > 0.0, "plant: specific heats must be > 0");
  require(fan_coeff > 0.0, "plant: fan_coeff must be > 0");
  require(finite(cop_a) && finite(cop_b) && finite(t_ref), "plant: COP parameters must be finite");
  require(cop_min > 0.0 && cop_min <= cop_max, "plant: COP bounds must satisfy 0 < min <= max");
  require(m_dot_water > 0.0, "plant: m_dot_water must be > 0");
}

void RcZoneParams::validate() const {
  require(capacitance > 0.0, "rc: capacitance must be > 0");
  require(ua >= 0.0, "rc: UA must be >= 0");
  require(finite(gain_occupied) && finite(gain_unoccupied), "rc: gains must be finite");
  require(noise_std >= 0.0, "rc: noise_std must be >= 0");
}

double cooling_demand(std::span<const ZoneThermo> zones, const PlantParams& p) {
  require(!zones.empty(), "cooling_demand: no zones");
  double q = 0.0;
  for (const auto& z : zones) {
    require(z.m_dot_air >= 0.0, "cooling_demand: negative air mass flow");
    q += z.m_dot_air * p.c_p_air * (z.t_zone - z.t_zone_setpoint);
  }
  return q;
}

double cooling_supply(double t_return, double t_supply, const PlantParams& p) {
  return p.m_dot_water * p.c_p_water * (t_return - t_supply);
}

double supply_temp_from_balance(double q_demand, double t_return, const PlantParams& p) {
  require(p.m_dot_water > 0.0, "supply_temp_from_balance: water mass flow must be > 0");
  require(q_demand >= 0.0, "supply_temp_from_balance: cooling demand must be >= 0");
  return t_return - q_demand / (p.m_dot_water * p.c_p_water);
}

double chiller_power(double q_supply, double cop) {
  require(cop > 0.0, "chiller_power: COP must be > 0");
  return q_supply / cop;
}

double cop(double outside_t, const PlantParams& p) {
  if (p.cop_mode == CopMode::CONSTANT) return p.cop_a;
  return std::clamp(p.cop_a - p.cop_b * (outside_t - p.t_ref), p.cop_min, p.cop_max);
}

double ahu_fan_power(double delta_p, const PlantParams& p) {
  require(delta_p >= 0.0, "ahu_fan_power: pressure differential must be >= 0");
  return p.fan_coeff * delta_p;
}

double rc_step(double t_zone, double t_out, double q_hvac, double q_internal, double dt_seconds,
               const RcZoneParams& rc) {
  require(dt_seconds > 0.0, "rc_step: dt must be > 0");
  if (dt_seconds * rc.ua >= rc.capacitance) {
    throw ValidationError("rc_step: dt " + csv::format_double(dt_seconds) +
                          " s is unstable; need dt < C/UA = " + csv::format_double(rc.capacitance / rc.ua) + " s");
  }
  return t_zone + dt_seconds / rc.capacitance * (rc.ua * (t_out - t_zone) + q_internal + q_hvac);
}

bool Schedule::occupied(Timestamp t) const {
  if (weekdays_only && weekday(t) >= 5) return false;
  const auto hour = seconds_of_day(t) / 3600;
  return hour >= start_hour && hour < end_hour;
}

double internal_gain(const RcZoneParams& rc, const Schedule& s, Timestamp t) {
  return s.occupied(t) ? rc.gain_occupied : rc.gain_unoccupied;
}

void WeatherParams::validate() const {
  require(finite(annual_mean) && finite(seasonal_amp) && finite(daily_amp), "weather: parameters must be finite");
  require(noise_std >= 0.0, "weather: noise_std must be >= 0");
  require(noise_tau_hours > 0.0, "weather: noise_tau_hours must be > 0");
}

double outside_temp(const WeatherParams& w, Timestamp t) {
  if (w.constant) return *w.constant;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double day = static_cast<double>(t.epoch_seconds) / 86400.0;
  const CivilDate d = civil_date(t);
  const double day_of_year = day - static_cast<double>(days_from_civil(d.year, 1, 1));
  const double hour = static_cast<double>(seconds_of_day(t)) / 3600.0;
  return w.annual_mean - w.seasonal_amp * std::cos(two_pi * (day_of_year - 15.0) / 365.0) +
         w.daily_amp * std::cos(two_pi * (hour - 15.0) / 24.0);
}

void VavParams::validate() const {
  require(m_dot_min >= 0.0 && m_dot_min_unocc >= 0.0, "vav: minimum flows must be >= 0");
  require(m_dot_design > 0.0 && p_design > 0.0, "vav: design flow and pressure must be > 0");
  require(kp_cool >= 0.0 && kp_heat >= 0.0 && q_heat_max >= 0.0, "vav: gains must be >= 0");
}

double VavParams::max_flow(double pressure_pa) const {
  return m_dot_design * std::sqrt(std::max(pressure_pa, 0.0) / p_design);
}

double VavParams::cooling_flow(double t_zone, double t_setpoint, double m_min, double pressure_pa) const {
  const double hi = std::max(max_flow(pressure_pa), m_min);
  return std::clamp(m_min + kp_cool * (t_zone - t_setpoint), m_min, hi);
}

double VavParams::reheat(double t_zone, double t_heat_setpoint) const {
  return std::clamp(kp_heat * (t_heat_setpoint - t_zone), 0.0, q_heat_max);
}

void ThermostatParams::validate() const {
  require(occ_heat < occ_cool && unocc_heat < unocc_cool, "thermostat: heating setpoint must be below cooling");
  require(pressure_occ >= 0.0 && pressure_unocc >= 0.0, "thermostat: pressures must be >= 0");
}

void SyntheticConfig::validate() const {
  require(n_zones >= 1, "synthetic: n_zones must be >= 1");
  require(months >= 1, "synthetic: months must be >= 1");
  require(is_supported_step(step_seconds), "synthetic: unsupported step " + std::to_string(step_seconds));
  require(sensor_noise_std >= 0.0 && flow_noise_std >= 0.0, "synthetic: noise must be >= 0");
  require(zones.empty() || zones.size() == static_cast<std::size_t>(n_zones),
          "synthetic: need one RC parameter set per zone");
  weather.validate();
  thermostat.validate();
  vav.validate();
  plant.validate();
  for (const auto& z : zones) z.validate();
}

std::vector<RcZoneParams> default_zone_params(int n_zones) {
  std::vector<RcZoneParams> out;
  for (int i = 0; i < n_zones; ++i) {
    RcZoneParams p;
    const double k = static_cast<double>(i % 5);
    p.capacitance *= 0.8 + 0.15 * k;
    p.ua *= 1.2 - 0.1 * k;
    p.gain_occupied *= 0.8 + 0.2 * k;
    out.push_back(p);
  }
  return out;
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const auto zones = cfg.zones.empty() ? default_zone_params(cfg.n_zones) : cfg.zones;
  const Timestamp end = add_months(cfg.start, cfg.months);
  const std::int64_t step = cfg.step_seconds;
  const auto n = static_cast<std::size_t>((end.epoch_seconds - cfg.start.epoch_seconds) / step);
  const auto dt = static_cast<double>(step);
  const ThermostatParams& th = cfg.thermostat;
  const auto time_at = [&](std::size_t i) { return Timestamp{cfg.start.epoch_seconds + static_cast<std::int64_t>(i) * step}; };

  SyntheticData out;
  out.store.step_seconds = step;
  using MK = MeasurementKind;
  const auto put = [&](const std::string& dev, MK kind, std::vector<double> values) {
    out.store.series.emplace(ingest::SeriesKey{dev, kind}, TimeSeries(dev, kind, step, cfg.start, std::move(values)));
  };

  // Weather: deterministic profile plus an AR(1) deviation.
  Rng wrng = Rng::stream(cfg.seed, 0);
  const double phi = std::exp(-dt / (cfg.weather.noise_tau_hours * 3600.0));
  const double innov = cfg.weather.noise_std * std::sqrt(1.0 - phi * phi);
  double dev = cfg.weather.constant ? 0.0 : cfg.weather.noise_std * wrng.normal();
  out.outside_c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.outside_c[i] = outside_temp(cfg.weather, time_at(i)) + dev;
    if (!cfg.weather.constant) dev = phi * dev + innov * wrng.normal();
  }
  std::vector<double> oat_f(n);
  std::transform(out.outside_c.begin(), out.outside_c.end(), oat_f.begin(), celsius_to_fahrenheit);
  put("weather_1", MK::outside_air_temperature_sensor, std::move(oat_f));

  std::vector<double> sat(n), press(n), swt(n);
  std::vector<std::uint8_t> occ(n);
  for (std::size_t i = 0; i < n; ++i) {
    occ[i] = cfg.schedule.occupied(time_at(i)) ? 1 : 0;
    sat[i] = celsius_to_fahrenheit(occ[i] ? th.supply_air_occ : th.supply_air_unocc);
    press[i] = occ[i] ? th.pressure_occ : th.pressure_unocc;
    swt[i] = celsius_to_fahrenheit(th.supply_water);
  }
  put("ahu_1", MK::supply_air_temperature_setpoint, sat);
  put("ahu_1", MK::supply_air_pressure_setpoint, press);
  put("ahu_1", MK::supply_water_temperature_setpoint, swt);

  for (int z = 0; z < cfg.n_zones; ++z) {
    const RcZoneParams& rc = zones[static_cast<std::size_t>(z)];
    Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(z) + 1);
    std::vector<double> temp(n), csp(n), hsp(n), flow(n), flow_sp(n), truth(n);
    double t = cfg.initial_temp;
    for (std::size_t i = 0; i < n; ++i) {
      const bool o = occ[i] != 0;
      const double cool = o ? th.occ_cool : th.unocc_cool;
      const double heat = o ? th.occ_heat : th.unocc_heat;
      const double t_sa = o ? th.supply_air_occ : th.supply_air_unocc;
      double m = 0.0;
      double q = 0.0;
      if (th.hvac_enabled) {
        m = cfg.vav.cooling_flow(t, cool, o ? cfg.vav.m_dot_min : cfg.vav.m_dot_min_unocc, press[i]);
        q = m * cfg.plant.c_p_air * (t_sa - t) + cfg.vav.reheat(t, heat);
      }
      truth[i] = t;
      temp[i] = celsius_to_fahrenheit(t + cfg.sensor_noise_std * rng.normal());
      csp[i] = celsius_to_fahrenheit(cool);
      hsp[i] = celsius_to_fahrenheit(heat);
      flow_sp[i] = m;
      flow[i] = std::max(0.0, m + cfg.flow_noise_std * rng.normal());
      t = rc_step(t, out.outside_c[i], q, internal_gain(rc, cfg.schedule, time_at(i)), dt, rc) +
          rc.noise_std * rng.normal();
    }
    const std::string dev_id = "vav_" + std::to_string(z + 1);
    put(dev_id, MK::zone_air_temperature_sensor, std::move(temp));
    put(dev_id, MK::zone_air_cooling_setpoint, std::move(csp));
    put(dev_id, MK::zone_air_heating_setpoint, std::move(hsp));
    put(dev_id, MK::supply_air_flowrate_sensor, std::move(flow));
    put(dev_id, MK::supply_air_flowrate_setpoint, std::move(flow_sp));
    out.true_temps.push_back(std::move(truth));

    DeviceMeta d;
    d.device_id = dev_id;
    d.name = "VAV " + std::to_string(z + 1);
    d.ns = "synthetic";
    d.device_type = DeviceType::VAV;
    d.zone_id = "zone_" + std::to_string(z + 1);
    d.floor = 1 + z / 10;
    d.x = 10.0 * (z % 10);
    d.y = 0.0;
    out.devices.push_back(d);
  }
  out.devices.push_back({"ahu_1", "AHU 1", "synthetic", DeviceType::AHU, "", 1, 0.0, -10.0});
  out.devices.push_back({"weather_1", "Weather station", "synthetic", DeviceType::WEATHER, "", 0, 0.0, -20.0});
  return out;
}

void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data) {
  std::filesystem::create_directories(dir);
  csv::write_file(dir / "telemetry.csv", ingest::format_long_csv(data.store));
  csv::write_file(dir / "devices.csv", ingest::format_device_meta(data.devices));
}

}  // namespace zonecast::plant
