#pragma once

// HVAC plant equations, an RC zone model and the synthetic building
// generator. Temperatures are in degrees C and powers in kW unless a name
// says otherwise; the generator writes telemetry in degrees F like the
// building data it stands in for.

#include "zonecast/ingest.hpp"
#include "zonecast/series.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace zonecast::plant {

enum class CopMode { CONSTANT, LINEAR };

struct PlantParams {
  double c_p_air = 1.006;    // kJ/(kg K)
  double c_p_water = 4.186;  // kJ/(kg K)
  double fan_coeff = 0.0025;  // kW/Pa
  CopMode cop_mode = CopMode::LINEAR;
  double cop_a = 5.0;
  double cop_b = 0.1;  // 1/K
  double t_ref = 25.0;
  double cop_min = 2.0;
  double cop_max = 7.0;
  double m_dot_water = 2.0;  // kg/s

  void validate() const;
};

struct ZoneThermo {
  double m_dot_air;  // kg/s
  double t_zone;
  double t_zone_setpoint;
};

struct RcZoneParams {
  double capacitance = 4000.0;  // kJ/K
  double ua = 0.3;              // kW/K
  double gain_occupied = 1.5;   // kW
  double gain_unoccupied = 0.3;
  double noise_std = 0.02;  // process noise per step, C

  void validate() const;
};

/// Sum of m_dot * c_p,air * (T_zone - T_setpoint); negative means heating.
double cooling_demand(std::span<const ZoneThermo> zones, const PlantParams& p);
/// m_dot_water * c_p,water * (T_return - T_supply)
double cooling_supply(double t_return, double t_supply, const PlantParams& p);
/// Supply water temperature at which cooling_supply equals q_demand.
double supply_temp_from_balance(double q_demand, double t_return, const PlantParams& p);
double chiller_power(double q_supply, double cop);
double cop(double outside_t, const PlantParams& p);
double ahu_fan_power(double delta_p, const PlantParams& p);

/// Explicit Euler step T + dt/C * (UA (T_out - T) + q_internal + q_hvac).
/// Throws ValidationError when dt * UA / C >= 1.
double rc_step(double t_zone, double t_out, double q_hvac, double q_internal, double dt_seconds,
               const RcZoneParams& rc);

/// Weekday occupancy, [start_hour, end_hour) of the UTC day.
struct Schedule {
  int start_hour = 7;
  int end_hour = 19;
  bool weekdays_only = true;

  bool occupied(Timestamp t) const;
};

double internal_gain(const RcZoneParams& rc, const Schedule& s, Timestamp t);

struct WeatherParams {
  double annual_mean = 15.0;
  double seasonal_amp = 11.0;  // coldest mid-January, warmest mid-July
  double daily_amp = 5.0;      // warmest at 15:00
  double noise_std = 1.0;      // stationary std of the AR(1) deviation
  double noise_tau_hours = 6.0;
  /// If set, the outside temperature is this constant (no noise).
  std::optional<double> constant;

  void validate() const;
};

/// Noise-free outside temperature.
double outside_temp(const WeatherParams& w, Timestamp t);

/// Zone thermostat and VAV box shared by the generator and the MPC plant.
struct VavParams {
  double m_dot_min = 0.05;     // kg/s, occupied
  double m_dot_min_unocc = 0.02;
  double m_dot_design = 0.6;   // kg/s at p_design
  double p_design = 250.0;     // Pa
  double kp_cool = 0.3;        // kg/s per K above the cooling setpoint
  double kp_heat = 2.0;        // kW per K below the heating setpoint
  double q_heat_max = 6.0;     // kW reheat

  void validate() const;
  /// m_dot_design * sqrt(pressure / p_design)
  double max_flow(double pressure_pa) const;
  /// Proportional cooling airflow, clamped to [m_min, max_flow(pressure)].
  double cooling_flow(double t_zone, double t_setpoint, double m_min, double pressure_pa) const;
  double reheat(double t_zone, double t_heat_setpoint) const;
};

struct ThermostatParams {
  double occ_cool = 24.0;
  double occ_heat = 20.0;
  double unocc_cool = 28.0;
  double unocc_heat = 16.0;
  double supply_air_occ = 13.0;
  double supply_air_unocc = 15.0;
  double pressure_occ = 250.0;  // Pa
  double pressure_unocc = 150.0;
  double supply_water = 7.0;
  bool hvac_enabled = true;

  void validate() const;
};

struct SyntheticConfig {
  int n_zones = 3;
  int months = 8;
  std::int64_t step_seconds = 300;
  std::uint64_t seed = 42;
  Timestamp start = make_utc(2022, 1, 1);
  double initial_temp = 21.0;
  double sensor_noise_std = 0.05;  // C, zone temperature readings
  double flow_noise_std = 0.003;   // kg/s
  WeatherParams weather;
  ThermostatParams thermostat;
  VavParams vav;
  PlantParams plant;
  Schedule schedule;
  /// Per-zone RC parameters; empty means default_zone_params(n_zones).
  std::vector<RcZoneParams> zones;

  void validate() const;
};

/// Zone i gets capacitance, UA and gains scaled by distinct factors.
std::vector<RcZoneParams> default_zone_params(int n_zones);

struct SyntheticData {
  ingest::SeriesStore store;
  std::vector<DeviceMeta> devices;
  /// True zone temperatures in C, one vector per zone (for tests).
  std::vector<std::vector<double>> true_temps;
  std::vector<double> outside_c;
};

/// Devices: vav_<i> (zone_<i>), ahu_1, weather_1. All nine measurement kinds
/// are emitted; temperatures and setpoints in F, flow in kg/s, pressure in Pa.
/// Deterministic in the seed; zone i draws from its own random stream.
SyntheticData generate_synthetic(const SyntheticConfig& cfg);

/// Writes telemetry.csv and devices.csv in the ingest formats.
void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data);

}  // namespace zonecast::plant
