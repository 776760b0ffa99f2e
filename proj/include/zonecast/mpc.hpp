#pragma once

// Tariff-aware supervisory control of the AHU: hourly supply air temperature
// and supply pressure setpoints chosen by derivative-free search over a
// plant rollout, applied in a receding-horizon loop.
//
// Plant per 300 s substep: each zone's VAV box sets its airflow with a
// proportional controller toward the VAV setpoint, capped by the flow the
// duct pressure allows; zone temperatures follow the RC model; the AHU
// cooling demand sum m_dot c_p (T_zone - u_T), clamped at zero, is met by
// the chiller at COP(T_out); fan power is k * u_p.

#include "zonecast/plant.hpp"

#include <span>
#include <string>
#include <vector>

namespace zonecast::mpc {

struct Control {
  double supply_temp_c;
  double pressure_pa;
  friend bool operator==(const Control&, const Control&) = default;
};

using ControlTrajectory = std::vector<Control>;

struct TariffSchedule {
  Timestamp start;
  std::vector<double> prices;  // per kWh, one per hour

  /// Prices finite and >= 0, at least min_hours of them.
  void validate(std::size_t min_hours) const;
};

/// `hour_start_rfc3339,price_per_kwh`, consecutive hours.
TariffSchedule parse_tariff_csv(std::string_view text, std::string_view source = "<memory>");
std::string format_tariff_csv(const TariffSchedule& t);

struct Bounds {
  double t_lo = 10.0;
  double t_hi = 18.0;
  double p_lo = 100.0;
  double p_hi = 600.0;
};

struct Building {
  plant::PlantParams plant;
  std::vector<plant::RcZoneParams> zones;
  plant::WeatherParams weather;  // noise-free profile
  plant::VavParams vav;
  plant::Schedule schedule;
  /// Zone VAV cooling setpoint; buildings usually run it on the cool side
  /// of the comfort band.
  double vav_setpoint_c = 21.5;

  /// The synthetic generator's building with n zones.
  static Building synthetic(int n_zones);
  void validate() const;
};

struct MpcConfig {
  int horizon_hours = 24;
  double comfort_center_c = 22.5;
  double comfort_band_c = 1.5;
  double lambda_comfort = 10.0;
  double lambda_smooth = 0.01;
  int inner_step_seconds = 300;
  Bounds bounds;
  int max_sweeps = 50;
  double sweep_tol = 1e-6;
  double accept_tol = 1e-9;
  /// Evenly spaced points scanned per coordinate before the golden-section
  /// refinement.
  int scan_points = 9;
  /// Golden-section stops when the bracket is below this fraction of the box.
  double line_tol = 1e-5;
  /// receding_horizon plans against the band narrowed by this much, so the
  /// soft penalty does not leave the plant sitting just outside the band.
  double plan_margin_c = 0.1;

  void validate() const;
};

struct State {
  Timestamp time;  // start of the current hour
  std::vector<double> t_zone;
  Control previous;  // controls applied in the previous hour
};

struct HourResult {
  std::vector<double> t_zone_end;
  double p_chiller_kw = 0.0;  // hour average
  double p_fan_kw = 0.0;
  double q_demand_kw = 0.0;  // hour average, after the clamp at zero
};

HourResult simulate_hour(const Building& b, Timestamp hour_start, std::span<const double> t_zone, Control u,
                         int inner_step_seconds);

struct ObjectiveTerms {
  double cost = 0.0;     // sum price * energy
  double comfort = 0.0;  // sum of squared band excess, unweighted
  double smooth = 0.0;   // sum of squared normalized moves, unweighted
  double total = 0.0;
};

/// Rolls u (one control per hour, u.size() hours) forward from `state`;
/// prices[h] applies to hour h. Throws ValidationError if u leaves the
/// bounds or prices are too short.
ObjectiveTerms objective_terms(const ControlTrajectory& u, const State& state, const Building& b,
                               std::span<const double> prices, const MpcConfig& cfg);
double objective(const ControlTrajectory& u, const State& state, const Building& b, std::span<const double> prices,
                 const MpcConfig& cfg);

/// Exhaustive search over per-hour controls from t_levels x p_levels for
/// cfg.horizon_hours hours. Ties go to the lexicographically smallest
/// trajectory (levels compared in ascending order, hour 0 first). Throws if
/// more than 1e6 trajectories would be enumerated.
ControlTrajectory grid_oracle(const State& state, const Building& b, std::span<const double> prices,
                              const MpcConfig& cfg, std::span<const double> t_levels,
                              std::span<const double> p_levels);

struct OptimizeResult {
  ControlTrajectory u;
  double j = 0.0;
  std::vector<double> start_j;  // objective at each start
  int sweeps = 0;
  int accepted_moves = 0;
};

/// Cyclic coordinate descent from one start.
OptimizeResult descend(const State& state, const Building& b, std::span<const double> prices, const MpcConfig& cfg,
                       ControlTrajectory start);

/// The three standard starts: constant mid-box, constant lower corner, and a
/// tariff heuristic (supply temperature rising with price, pressure falling).
std::vector<ControlTrajectory> standard_starts(std::span<const double> prices, const MpcConfig& cfg);

/// Best descent over the standard starts.
OptimizeResult optimize(const State& state, const Building& b, std::span<const double> prices, const MpcConfig& cfg);

struct TraceRow {
  int hour = 0;
  Control u{};
  double t_zone_c = 0.0;  // mean over zones at the end of the hour
  double p_chiller_kw = 0.0;
  double p_fan_kw = 0.0;
  double price = 0.0;
  double cost = 0.0;
  bool comfort_violation = false;  // any zone outside the band
};

struct Trace {
  std::vector<TraceRow> rows;
  double total_cost = 0.0;
  double comfort = 0.0;  // unweighted sum of squared band excess
  int violation_hours = 0;
};

/// Each hour: optimize over min(N, hours of tariff left), apply the first
/// control for one hour, advance. Needs tariff.prices.size() >= total_hours.
Trace receding_horizon(const State& initial, const Building& b, const TariffSchedule& tariff, const MpcConfig& cfg,
                       int total_hours);

/// Holds u for every hour.
Trace constant_policy(const State& initial, const Building& b, const TariffSchedule& tariff, const MpcConfig& cfg,
                      Control u, int total_hours);

struct Baseline {
  Control u{};
  Trace trace;
  double score = 0.0;  // total cost + lambda_comfort * comfort
};

/// Best constant policy over the grid by total cost plus weighted comfort.
Baseline best_constant(const State& initial, const Building& b, const TariffSchedule& tariff, const MpcConfig& cfg,
                       int total_hours, int levels = 9);

/// `hour,u_supply_temp_c,u_pressure_pa,t_zone_c,p_chiller_kw,p_fan_kw,price,cost`
std::string format_trace_csv(const Trace& t);

}  // namespace zonecast::mpc
