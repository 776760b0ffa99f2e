#include "zonecast/mpc.hpp"

#include "zonecast/csv.hpp"
#include "zonecast/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zonecast::mpc {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

// Per-substep inputs that do not depend on the controls.
struct Horizon {
  int hours = 0;
  int sub = 0;
  double dt = 0.0;
  std::vector<double> t_out;
  std::vector<double> cop;
  std::vector<double> m_min;
  std::vector<double> gain;  // zone-major: gain[z * hours * sub + k]
};

Horizon make_horizon(const Building& b, Timestamp start, int hours, int inner_step) {
  require(inner_step > 0 && 3600 % inner_step == 0, "mpc: inner step must divide 3600 s");
  Horizon h;
  h.hours = hours;
  h.sub = 3600 / inner_step;
  h.dt = inner_step;
  const std::size_t n = static_cast<std::size_t>(hours) * static_cast<std::size_t>(h.sub);
  h.t_out.resize(n);
  h.cop.resize(n);
  h.m_min.resize(n);
  h.gain.resize(n * b.zones.size());
  for (const auto& z : b.zones) plant::rc_step(0.0, 0.0, 0.0, 0.0, h.dt, z);  // throws if dt is unstable
  for (std::size_t k = 0; k < n; ++k) {
    const Timestamp t{start.epoch_seconds + static_cast<std::int64_t>(k) * inner_step};
    h.t_out[k] = plant::outside_temp(b.weather, t);
    h.cop[k] = plant::cop(h.t_out[k], b.plant);
    require(h.cop[k] > 0.0, "mpc: COP must be > 0");
    const bool occ = b.schedule.occupied(t);
    h.m_min[k] = occ ? b.vav.m_dot_min : b.vav.m_dot_min_unocc;
    for (std::size_t z = 0; z < b.zones.size(); ++z) h.gain[z * n + k] = occ ? b.zones[z].gain_occupied : b.zones[z].gain_unoccupied;
  }
  return h;
}

struct HourPower {
  double p_chiller = 0.0;
  double p_fan = 0.0;
  double q = 0.0;
};

// Advances temps (one per zone) through hour h of the horizon. Same
// arithmetic as VavParams::cooling_flow and plant::rc_step, with the
// per-hour and per-zone constants hoisted.
HourPower step_hour(const Building& b, const Horizon& hz, int h, std::span<double> temps, Control u) {
  const std::size_t n = static_cast<std::size_t>(hz.hours) * static_cast<std::size_t>(hz.sub);
  const double cp = b.plant.c_p_air;
  const double max_flow = b.vav.max_flow(u.pressure_pa);
  const double kp = b.vav.kp_cool;
  const double sp = b.vav_setpoint_c;
  HourPower out;
  for (int s = 0; s < hz.sub; ++s) {
    const std::size_t k = static_cast<std::size_t>(h) * static_cast<std::size_t>(hz.sub) + static_cast<std::size_t>(s);
    const double m_min = hz.m_min[k];
    const double hi = std::max(max_flow, m_min);
    double demand = 0.0;
    for (std::size_t z = 0; z < temps.size(); ++z) {
      const double t = temps[z];
      const double m = std::clamp(m_min + kp * (t - sp), m_min, hi);
      demand += m * cp * (t - u.supply_temp_c);
      const auto& rc = b.zones[z];
      temps[z] = t + hz.dt / rc.capacitance * (rc.ua * (hz.t_out[k] - t) + hz.gain[z * n + k] + m * cp * (u.supply_temp_c - t));
    }
    demand = std::max(demand, 0.0);
    out.q += demand;
    out.p_chiller += demand / hz.cop[k];
  }
  out.q /= hz.sub;
  out.p_chiller /= hz.sub;
  out.p_fan = plant::ahu_fan_power(u.pressure_pa, b.plant);
  return out;
}

double band_excess(std::span<const double> temps, const MpcConfig& cfg) {
  double s = 0.0;
  for (double t : temps) {
    const double e = std::max(0.0, std::abs(t - cfg.comfort_center_c) - cfg.comfort_band_c);
    s += e * e;
  }
  return s;
}

bool violates(std::span<const double> temps, const MpcConfig& cfg) {
  return std::any_of(temps.begin(), temps.end(), [&](double t) {
    return std::abs(t - cfg.comfort_center_c) > cfg.comfort_band_c + 1e-9;
  });
}

double move_penalty(Control a, Control b, const Bounds& bd) {
  const double dt = (a.supply_temp_c - b.supply_temp_c) / (bd.t_hi - bd.t_lo);
  const double dp = (a.pressure_pa - b.pressure_pa) / (bd.p_hi - bd.p_lo);
  return dt * dt + dp * dp;
}

void check_controls(const ControlTrajectory& u, const Bounds& bd) {
  for (std::size_t h = 0; h < u.size(); ++h) {
    const Control c = u[h];
    const bool ok = std::isfinite(c.supply_temp_c) && std::isfinite(c.pressure_pa) && c.supply_temp_c >= bd.t_lo &&
                    c.supply_temp_c <= bd.t_hi && c.pressure_pa >= bd.p_lo && c.pressure_pa <= bd.p_hi;
    if (!ok) {
      throw ValidationError("mpc: control at hour " + std::to_string(h) + " (" + csv::format_double(c.supply_temp_c) +
                            " C, " + csv::format_double(c.pressure_pa) + " Pa) is outside the bounds");
    }
  }
}

void check_state(const State& s, const Building& b) {
  require(s.t_zone.size() == b.zones.size(), "mpc: state has " + std::to_string(s.t_zone.size()) +
                                                 " zone temperatures, building has " +
                                                 std::to_string(b.zones.size()) + " zones");
  for (double t : s.t_zone) require(std::isfinite(t), "mpc: zone temperatures must be finite");
}

// Objective evaluator with the control-independent inputs precomputed.
// A Rollout keeps the zone temperatures at each hour start and the per-hour
// terms so a change at hour h only re-simulates hours h..N-1.
struct Rollout {
  std::vector<double> temps;  // (hours + 1) x zones
  std::vector<double> cost;
  std::vector<double> comfort;
};

class Problem {
 public:
  Problem(const State& state, const Building& b, std::span<const double> prices, const MpcConfig& cfg, int hours)
      : state_(state), b_(b), prices_(prices), cfg_(cfg),
        hz_(make_horizon(b, state.time, hours, cfg.inner_step_seconds)) {
    require(hours >= 1, "mpc: horizon must be >= 1 hour");
    require(prices.size() >= static_cast<std::size_t>(hours),
            "mpc: tariff has " + std::to_string(prices.size()) + " hours, horizon needs " + std::to_string(hours));
    check_state(state, b);
  }

  int hours() const { return hz_.hours; }

  Rollout start() const {
    const std::size_t z = state_.t_zone.size();
    const auto n = static_cast<std::size_t>(hz_.hours);
    Rollout r{std::vector<double>((n + 1) * z), std::vector<double>(n), std::vector<double>(n)};
    std::copy(state_.t_zone.begin(), state_.t_zone.end(), r.temps.begin());
    return r;
  }

  void check(const ControlTrajectory& u) const {
    require(u.size() == static_cast<std::size_t>(hz_.hours), "mpc: trajectory length " + std::to_string(u.size()) +
                                                                  " differs from horizon " +
                                                                  std::to_string(hz_.hours));
    check_controls(u, cfg_.bounds);
  }

  // Recomputes hours from..N-1 of r under u.
  void roll(const ControlTrajectory& u, std::size_t from, Rollout& r) const {
    const std::size_t z = state_.t_zone.size();
    for (std::size_t h = from; h < u.size(); ++h) {
      std::copy_n(r.temps.begin() + static_cast<std::ptrdiff_t>(h * z), z,
                  r.temps.begin() + static_cast<std::ptrdiff_t>((h + 1) * z));
      const std::span<double> t(r.temps.data() + (h + 1) * z, z);
      const HourPower p = step_hour(b_, hz_, static_cast<int>(h), t, u[h]);
      r.cost[h] = prices_[h] * (p.p_chiller + p.p_fan);
      r.comfort[h] = band_excess(t, cfg_);
    }
  }

  ObjectiveTerms sum(const ControlTrajectory& u, const Rollout& r) const {
    ObjectiveTerms out;
    Control prev = state_.previous;
    for (std::size_t h = 0; h < u.size(); ++h) {
      out.cost += r.cost[h];
      out.comfort += r.comfort[h];
      out.smooth += move_penalty(u[h], prev, cfg_.bounds);
      prev = u[h];
    }
    out.total = out.cost + cfg_.lambda_comfort * out.comfort + cfg_.lambda_smooth * out.smooth;
    return out;
  }

  ObjectiveTerms terms(const ControlTrajectory& u) const {
    check(u);
    Rollout r = start();
    roll(u, 0, r);
    return sum(u, r);
  }

  double operator()(const ControlTrajectory& u) const { return terms(u).total; }

 private:
  const State& state_;
  const Building& b_;
  std::span<const double> prices_;
  const MpcConfig& cfg_;
  Horizon hz_;
};

constexpr double kInvPhi = 0.6180339887498949;

}  // namespace

void TariffSchedule::validate(std::size_t min_hours) const {
  require(prices.size() >= min_hours, "tariff: " + std::to_string(prices.size()) + " hours, need at least " +
                                          std::to_string(min_hours));
  for (std::size_t i = 0; i < prices.size(); ++i) {
    require(std::isfinite(prices[i]) && prices[i] >= 0.0,
            "tariff: price at hour " + std::to_string(i) + " must be finite and >= 0");
  }
}

TariffSchedule parse_tariff_csv(std::string_view text, std::string_view source) {
  TariffSchedule out;
  bool header = true;
  const std::string src(source);
  csv::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    const auto f = csv::split_line(line);
    const std::string where = src + ":" + std::to_string(line_no);
    if (header) {
      header = false;
      require(f.size() == 2 && f[0] == "hour_start_rfc3339" && f[1] == "price_per_kwh",
              where + ": expected header hour_start_rfc3339,price_per_kwh");
      return;
    }
    require(f.size() == 2, where + ": expected 2 fields");
    Timestamp t;
    try {
      t = parse_rfc3339(f[0]);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    const auto p = csv::parse_double(f[1]);
    require(p.has_value(), where + ": bad price '" + f[1] + "'");
    if (out.prices.empty()) {
      require(t.epoch_seconds % 3600 == 0, where + ": hours must start on the hour");
      out.start = t;
    } else {
      const auto expect = out.start.epoch_seconds + static_cast<std::int64_t>(out.prices.size()) * 3600;
      require(t.epoch_seconds == expect, where + ": expected hour " + format_rfc3339(Timestamp{expect}));
    }
    out.prices.push_back(*p);
  });
  require(!header, src + ": empty tariff file");
  out.validate(1);
  return out;
}

std::string format_tariff_csv(const TariffSchedule& t) {
  std::string out = "hour_start_rfc3339,price_per_kwh\n";
  for (std::size_t i = 0; i < t.prices.size(); ++i) {
    out += format_rfc3339(Timestamp{t.start.epoch_seconds + static_cast<std::int64_t>(i) * 3600});
    out += ',';
    out += csv::format_double(t.prices[i]);
    out += '\n';
  }
  return out;
}

Building Building::synthetic(int n_zones) {
  require(n_zones >= 1, "building: n_zones must be >= 1");
  Building b;
  b.zones = plant::default_zone_params(n_zones);
  for (auto& z : b.zones) z.noise_std = 0.0;
  b.weather.noise_std = 0.0;
  return b;
}

void Building::validate() const {
  require(!zones.empty(), "building: no zones");
  plant.validate();
  vav.validate();
  weather.validate();
  for (const auto& z : zones) z.validate();
  require(std::isfinite(vav_setpoint_c), "building: VAV setpoint must be finite");
}

void MpcConfig::validate() const {
  require(horizon_hours >= 1, "mpc: horizon_hours must be >= 1");
  require(comfort_band_c > 0.0, "mpc: comfort band must be > 0");
  require(std::isfinite(comfort_center_c), "mpc: comfort center must be finite");
  require(lambda_comfort >= 0.0 && lambda_smooth >= 0.0, "mpc: weights must be >= 0");
  require(inner_step_seconds > 0 && 3600 % inner_step_seconds == 0, "mpc: inner step must divide 3600 s");
  require(bounds.t_lo < bounds.t_hi && bounds.p_lo < bounds.p_hi, "mpc: bounds must satisfy lo < hi");
  require(bounds.p_lo >= 0.0, "mpc: pressure bounds must be >= 0");
  require(max_sweeps >= 1, "mpc: max_sweeps must be >= 1");
  require(sweep_tol >= 0.0 && accept_tol >= 0.0, "mpc: tolerances must be >= 0");
  require(scan_points >= 3, "mpc: scan_points must be >= 3");
  require(line_tol > 0.0 && line_tol < 1.0, "mpc: line_tol must be in (0, 1)");
  require(plan_margin_c >= 0.0 && plan_margin_c < comfort_band_c, "mpc: plan margin must be in [0, band)");
}

HourResult simulate_hour(const Building& b, Timestamp hour_start, std::span<const double> t_zone, Control u,
                         int inner_step_seconds) {
  require(t_zone.size() == b.zones.size(), "simulate_hour: zone count mismatch");
  const Horizon hz = make_horizon(b, hour_start, 1, inner_step_seconds);
  HourResult out;
  out.t_zone_end.assign(t_zone.begin(), t_zone.end());
  const HourPower p = step_hour(b, hz, 0, out.t_zone_end, u);
  out.p_chiller_kw = p.p_chiller;
  out.p_fan_kw = p.p_fan;
  out.q_demand_kw = p.q;
  return out;
}

ObjectiveTerms objective_terms(const ControlTrajectory& u, const State& state, const Building& b,
                               std::span<const double> prices, const MpcConfig& cfg) {
  cfg.validate();
  const Problem prob(state, b, prices, cfg, static_cast<int>(u.size()));
  return prob.terms(u);
}

double objective(const ControlTrajectory& u, const State& state, const Building& b, std::span<const double> prices,
                 const MpcConfig& cfg) {
  return objective_terms(u, state, b, prices, cfg).total;
}

ControlTrajectory grid_oracle(const State& state, const Building& b, std::span<const double> prices,
                              const MpcConfig& cfg, std::span<const double> t_levels,
                              std::span<const double> p_levels) {
  cfg.validate();
  require(!t_levels.empty() && !p_levels.empty(), "grid_oracle: empty level set");
  std::vector<Control> cands;
  std::vector<double> ts(t_levels.begin(), t_levels.end()), ps(p_levels.begin(), p_levels.end());
  std::sort(ts.begin(), ts.end());
  std::sort(ps.begin(), ps.end());
  for (double t : ts) {
    for (double p : ps) cands.push_back({t, p});
  }
  const int n = cfg.horizon_hours;
  double combos = 1.0;
  for (int h = 0; h < n; ++h) combos *= static_cast<double>(cands.size());
  require(combos <= 1e6, "grid_oracle: " + csv::format_double(combos) + " trajectories exceed the 1e6 limit");
  check_controls(cands, cfg.bounds);

  const Problem prob(state, b, prices, cfg, n);
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  ControlTrajectory u(static_cast<std::size_t>(n), cands[0]);
  ControlTrajectory best = u;
  double best_j = std::numeric_limits<double>::infinity();
  for (;;) {
    for (std::size_t h = 0; h < idx.size(); ++h) u[h] = cands[idx[h]];
    const double j = prob(u);
    if (j < best_j) {
      best_j = j;
      best = u;
    }
    // Odometer with the last hour varying fastest: lexicographic order.
    std::size_t h = idx.size();
    while (h > 0 && ++idx[h - 1] == cands.size()) idx[--h] = 0;
    if (h == 0) break;
  }
  return best;
}

OptimizeResult descend(const State& state, const Building& b, std::span<const double> prices, const MpcConfig& cfg,
                       ControlTrajectory start) {
  cfg.validate();
  const Problem prob(state, b, prices, cfg, static_cast<int>(start.size()));
  prob.check(start);
  OptimizeResult out;
  out.u = std::move(start);
  Rollout cur = prob.start();
  prob.roll(out.u, 0, cur);
  out.j = prob.sum(out.u, cur).total;
  out.start_j = {out.j};

  Rollout tmp = cur;
  ControlTrajectory v = out.u;
  const auto line_search = [&](std::size_t h, bool temp, double lo, double hi) {
    v = out.u;
    const auto at = [&](double x) {
      (temp ? v[h].supply_temp_c : v[h].pressure_pa) = x;
      prob.roll(v, h, tmp);
      return prob.sum(v, tmp).total;
    };
    const int m = cfg.scan_points;
    double best_x = lo;
    double best_f = std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k) {
      const double x = k == m - 1 ? hi : lo + (hi - lo) * k / (m - 1);
      const double f = at(x);
      if (f < best_f) {
        best_f = f;
        best_x = x;
      }
    }
    const double step = (hi - lo) / (m - 1);
    double a = std::max(lo, best_x - step);
    double c = std::min(hi, best_x + step);
    double x1 = c - kInvPhi * (c - a);
    double x2 = a + kInvPhi * (c - a);
    double f1 = at(x1);
    double f2 = at(x2);
    const double tol = cfg.line_tol * (hi - lo);
    while (c - a > tol) {
      if (f1 <= f2) {
        c = x2;
        x2 = x1;
        f2 = f1;
        x1 = c - kInvPhi * (c - a);
        f1 = at(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + kInvPhi * (c - a);
        f2 = at(x2);
      }
    }
    if (f1 < best_f) {
      best_f = f1;
      best_x = x1;
    }
    if (f2 < best_f) {
      best_f = f2;
      best_x = x2;
    }
    return std::pair{best_x, best_f};
  };

  const Bounds& bd = cfg.bounds;
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    const double j0 = out.j;
    ++out.sweeps;
    for (std::size_t h = 0; h < out.u.size(); ++h) {
      for (bool temp : {true, false}) {
        const auto [x, f] = temp ? line_search(h, true, bd.t_lo, bd.t_hi) : line_search(h, false, bd.p_lo, bd.p_hi);
        if (f < out.j - cfg.accept_tol) {
          (temp ? out.u[h].supply_temp_c : out.u[h].pressure_pa) = x;
          prob.roll(out.u, h, cur);
          out.j = prob.sum(out.u, cur).total;
          ++out.accepted_moves;
        }
      }
    }
    if (j0 - out.j < cfg.sweep_tol) break;
  }
  return out;
}

std::vector<ControlTrajectory> standard_starts(std::span<const double> prices, const MpcConfig& cfg) {
  const Bounds& bd = cfg.bounds;
  const auto n = static_cast<std::size_t>(cfg.horizon_hours);
  require(prices.size() >= n, "mpc: tariff shorter than the horizon");
  std::vector<ControlTrajectory> out;
  out.emplace_back(n, Control{0.5 * (bd.t_lo + bd.t_hi), 0.5 * (bd.p_lo + bd.p_hi)});
  out.emplace_back(n, Control{bd.t_lo, bd.p_lo});
  const auto [mn, mx] = std::minmax_element(prices.begin(), prices.begin() + static_cast<std::ptrdiff_t>(n));
  ControlTrajectory heur(n);
  for (std::size_t h = 0; h < n; ++h) {
    const double r = *mx > *mn ? (prices[h] - *mn) / (*mx - *mn) : 0.5;
    heur[h] = {bd.t_lo + r * (bd.t_hi - bd.t_lo), bd.p_hi - r * (bd.p_hi - bd.p_lo)};
  }
  out.push_back(std::move(heur));
  return out;
}

OptimizeResult optimize(const State& state, const Building& b, std::span<const double> prices, const MpcConfig& cfg) {
  cfg.validate();
  OptimizeResult best;
  std::vector<double> start_j;
  bool first = true;
  for (auto& s : standard_starts(prices, cfg)) {
    OptimizeResult r = descend(state, b, prices, cfg, std::move(s));
    start_j.push_back(r.start_j.front());
    if (first || r.j < best.j) {
      best = std::move(r);
      first = false;
    }
  }
  best.start_j = std::move(start_j);
  return best;
}

namespace {

Trace run(const State& initial, const Building& b, const TariffSchedule& tariff, const MpcConfig& cfg,
          int total_hours, const auto& policy) {
  cfg.validate();
  b.validate();
  require(total_hours >= 1, "mpc: total_hours must be >= 1");
  tariff.validate(static_cast<std::size_t>(total_hours));
  check_state(initial, b);
  State s = initial;
  Trace out;
  for (int h = 0; h < total_hours; ++h) {
    const Control u = policy(s, h);
    check_controls({u}, cfg.bounds);
    const HourResult r = simulate_hour(b, s.time, s.t_zone, u, cfg.inner_step_seconds);
    TraceRow row;
    row.hour = h;
    row.u = u;
    double mean = 0.0;
    for (double t : r.t_zone_end) mean += t;
    row.t_zone_c = mean / static_cast<double>(r.t_zone_end.size());
    row.p_chiller_kw = r.p_chiller_kw;
    row.p_fan_kw = r.p_fan_kw;
    row.price = tariff.prices[static_cast<std::size_t>(h)];
    row.cost = row.price * (row.p_chiller_kw + row.p_fan_kw);
    row.comfort_violation = violates(r.t_zone_end, cfg);
    out.total_cost += row.cost;
    out.comfort += band_excess(r.t_zone_end, cfg);
    out.violation_hours += row.comfort_violation ? 1 : 0;
    out.rows.push_back(row);
    s = State{Timestamp{s.time.epoch_seconds + 3600}, r.t_zone_end, u};
  }
  return out;
}

}  // namespace

Trace receding_horizon(const State& initial, const Building& b, const TariffSchedule& tariff, const MpcConfig& cfg,
                       int total_hours) {
  require(initial.time.epoch_seconds == tariff.start.epoch_seconds,
          "receding_horizon: state time differs from the tariff start");
  return run(initial, b, tariff, cfg, total_hours, [&](const State& s, int h) {
    MpcConfig c = cfg;
    c.comfort_band_c = cfg.comfort_band_c - cfg.plan_margin_c;
    c.horizon_hours = std::min(cfg.horizon_hours, static_cast<int>(tariff.prices.size()) - h);
    const std::span<const double> prices(tariff.prices.data() + h, static_cast<std::size_t>(c.horizon_hours));
    return optimize(s, b, prices, c).u.front();
  });
}

Trace constant_policy(const State& initial, const Building& b, const TariffSchedule& tariff, const MpcConfig& cfg,
                      Control u, int total_hours) {
  return run(initial, b, tariff, cfg, total_hours, [&](const State&, int) { return u; });
}

Baseline best_constant(const State& initial, const Building& b, const TariffSchedule& tariff, const MpcConfig& cfg,
                       int total_hours, int levels) {
  require(levels >= 2, "best_constant: levels must be >= 2");
  const Bounds& bd = cfg.bounds;
  Baseline best;
  bool first = true;
  for (int i = 0; i < levels; ++i) {
    for (int k = 0; k < levels; ++k) {
      const Control u{i == levels - 1 ? bd.t_hi : bd.t_lo + (bd.t_hi - bd.t_lo) * i / (levels - 1),
                      k == levels - 1 ? bd.p_hi : bd.p_lo + (bd.p_hi - bd.p_lo) * k / (levels - 1)};
      Trace tr = constant_policy(initial, b, tariff, cfg, u, total_hours);
      const double score = tr.total_cost + cfg.lambda_comfort * tr.comfort;
      if (first || score < best.score) {
        best = {u, std::move(tr), score};
        first = false;
      }
    }
  }
  return best;
}

std::string format_trace_csv(const Trace& t) {
  std::string out = "hour,u_supply_temp_c,u_pressure_pa,t_zone_c,p_chiller_kw,p_fan_kw,price,cost\n";
  for (const auto& r : t.rows) {
    out += std::to_string(r.hour);
    for (double v : {r.u.supply_temp_c, r.u.pressure_pa, r.t_zone_c, r.p_chiller_kw, r.p_fan_kw, r.price, r.cost}) {
      out += ',';
      out += csv::format_double(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace zonecast::mpc
