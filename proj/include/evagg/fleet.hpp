#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "evagg/common.hpp"

namespace evagg {

/// Uniform discretization of the planning horizon.
struct TimeGrid {
  int n_periods = 96;     // N_T
  double dt_hours = 0.25; // length of one period, h

  double horizon_hours() const { return n_periods * dt_hours; }
};

/// Static technical description of one vehicle.
struct EvParams {
  double max_charge_kw = 7.4;
  double efficiency = 0.95;   // round-trip charging efficiency, in (0,1]
  double e_min_kwh = 10.0;
  double e_max_kwh = 51.0;
  double e_init_kwh = 30.5;   // state of charge at the start (and end) of the day
  double kwh_per_km = 0.137;
};

struct PriceSeries {
  std::vector<double> eur_per_kwh;  // one entry per period
};

/// Box bounds plus a cardinality floor on a vehicle's availability.
/// alpha_lo[t] = alpha_hi[t] pins the period; k_min is the minimum number of
/// periods the vehicle must be available over the horizon.
struct UncertaintySet {
  std::vector<int> alpha_lo;
  std::vector<int> alpha_hi;
  int k_min = 0;
};

/// Expected availability and per-period consumption used by the models.
struct ForecastInputs {
  std::vector<double> alpha_hat;    // in [0,1]
  std::vector<double> xi_hat_kwh;   // >= 0
};

/// Day-ahead plan for the whole fleet, plus the worst-case certificate.
/// All matrices are indexed [vehicle][period].
struct ScheduleSolution {
  std::vector<std::vector<double>> charge_kw;        // c
  std::vector<std::vector<double>> linear_charge_kw; // z
  std::vector<std::vector<double>> soc_kwh;          // e
  std::vector<std::vector<double>> slack_pos_kwh;    // s+
  std::vector<std::vector<double>> slack_neg_kwh;    // s-
  std::vector<std::vector<int>> wc_alpha;            // worst-case availability
  std::vector<double> wc_energy_kwh;                 // per-vehicle worst-case energy
  std::vector<double> dual_k;                        // zeta
  std::vector<std::vector<double>> dual_lo;          // beta_lo (>= 0)
  std::vector<std::vector<double>> dual_hi;          // beta_hi (<= 0)
  double objective_eur = 0.0;
};

/// One day of realized data; used for forecasting and real-time validation.
struct DayRecord {
  int date_index = 0;
  int weekday = 0;  // 0..6
  std::vector<std::vector<int>> realized_alpha;      // [v][t]
  std::vector<std::vector<double>> realized_xi_kwh;  // [v][t]
  PriceSeries prices;
};

struct Violation {
  int vehicle = -1;  // -1 when not tied to a vehicle
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }

  void add(int vehicle, std::string message) {
    violations.push_back({vehicle, std::move(message)});
  }

  std::string to_string() const {
    if (ok()) return "pass";
    std::string out;
    for (const auto& v : violations) {
      if (v.vehicle >= 0) out += "vehicle " + std::to_string(v.vehicle) + ": ";
      out += v.message + "\n";
    }
    return out;
  }
};

inline ValidationReport validate_fleet(const std::vector<EvParams>& fleet,
                                       const TimeGrid& grid,
                                       const std::vector<UncertaintySet>& sets) {
  ValidationReport report;
  if (grid.n_periods < 1) report.add(-1, "time grid needs at least one period");
  if (!(grid.dt_hours > 0.0)) report.add(-1, "dt_hours must be positive");
  if (fleet.size() != sets.size()) {
    report.add(-1, "fleet and uncertainty-set lists differ in length");
    return report;
  }
  for (int v = 0; v < static_cast<int>(fleet.size()); ++v) {
    const EvParams& ev = fleet[v];
    if (ev.max_charge_kw < 0.0) report.add(v, "negative maximum charge rate");
    if (!(ev.efficiency > 0.0) || ev.efficiency > 1.0)
      report.add(v, "efficiency outside (0,1]");
    if (ev.e_min_kwh < 0.0) report.add(v, "negative minimum SOC");
    if (ev.e_min_kwh > ev.e_max_kwh) report.add(v, "minimum SOC above maximum");
    if (ev.e_init_kwh < ev.e_min_kwh) report.add(v, "initial SOC below minimum");
    if (ev.e_init_kwh > ev.e_max_kwh) report.add(v, "initial SOC above maximum");
    if (ev.kwh_per_km < 0.0) report.add(v, "negative energy rating per km");

    const UncertaintySet& u = sets[v];
    const int T = grid.n_periods;
    if (static_cast<int>(u.alpha_lo.size()) != T ||
        static_cast<int>(u.alpha_hi.size()) != T) {
      report.add(v, "availability bounds not sized to the time grid");
      continue;
    }
    if (u.k_min < 0) report.add(v, "negative availability floor K");
    int sum_hi = 0;
    for (int t = 0; t < T; ++t) {
      const int lo = u.alpha_lo[t], hi = u.alpha_hi[t];
      if ((lo != 0 && lo != 1) || (hi != 0 && hi != 1)) {
        report.add(v, "availability bounds must be binary");
        break;
      }
      if (lo > hi) {
        report.add(v, "alpha_lo above alpha_hi at period " + std::to_string(t + 1));
        break;
      }
      sum_hi += hi;
    }
    if (sum_hi < u.k_min) report.add(v, "empty uncertainty set");
  }
  return report;
}

/// Checks a solution against the invariants of the originating fleet:
/// variable bounds, slack nonnegativity, binarity of the worst-case
/// availability, and the sign conditions on the lower-level duals.
inline ValidationReport validate_solution(const ScheduleSolution& sol,
                                          const std::vector<EvParams>& fleet,
                                          const TimeGrid& grid,
                                          double tol = 1e-6) {
  ValidationReport report;
  const int V = static_cast<int>(fleet.size());
  const int T = grid.n_periods;
  auto sized = [&](const auto& mat) {
    if (static_cast<int>(mat.size()) != V) return false;
    for (const auto& row : mat)
      if (static_cast<int>(row.size()) != T) return false;
    return true;
  };
  if (!sized(sol.charge_kw) || !sized(sol.linear_charge_kw) || !sized(sol.soc_kwh) ||
      !sized(sol.slack_pos_kwh) || !sized(sol.slack_neg_kwh) || !sized(sol.wc_alpha) ||
      !sized(sol.dual_lo) || !sized(sol.dual_hi) ||
      static_cast<int>(sol.wc_energy_kwh.size()) != V ||
      static_cast<int>(sol.dual_k.size()) != V) {
    report.add(-1, "solution matrices not sized to fleet and grid");
    return report;
  }
  for (int v = 0; v < V; ++v) {
    const EvParams& ev = fleet[v];
    for (int t = 0; t < T; ++t) {
      if (sol.charge_kw[v][t] < -tol || sol.charge_kw[v][t] > ev.max_charge_kw + tol)
        report.add(v, "charge outside [0, C_max] at period " + std::to_string(t + 1));
      if (sol.linear_charge_kw[v][t] < -tol ||
          sol.linear_charge_kw[v][t] > ev.max_charge_kw + tol)
        report.add(v, "linearized charge outside [0, C_max] at period " + std::to_string(t + 1));
      if (sol.soc_kwh[v][t] < ev.e_min_kwh - tol || sol.soc_kwh[v][t] > ev.e_max_kwh + tol)
        report.add(v, "SOC outside bounds at period " + std::to_string(t + 1));
      if (sol.slack_pos_kwh[v][t] < -tol || sol.slack_neg_kwh[v][t] < -tol)
        report.add(v, "negative slack at period " + std::to_string(t + 1));
      if (sol.wc_alpha[v][t] != 0 && sol.wc_alpha[v][t] != 1)
        report.add(v, "worst-case availability not binary at period " + std::to_string(t + 1));
      if (sol.dual_lo[v][t] < -tol)
        report.add(v, "beta_lo negative at period " + std::to_string(t + 1));
      if (sol.dual_hi[v][t] > tol)
        report.add(v, "beta_hi positive at period " + std::to_string(t + 1));
    }
    if (sol.dual_k[v] < -tol) report.add(v, "zeta negative");
  }
  return report;
}

/// A moving vehicle cannot be plugged in: xi > 0 forces alpha = 0.
inline ValidationReport validate_day_record(const DayRecord& rec, int n_vehicles,
                                            const TimeGrid& grid) {
  ValidationReport report;
  const int T = grid.n_periods;
  if (static_cast<int>(rec.realized_alpha.size()) != n_vehicles ||
      static_cast<int>(rec.realized_xi_kwh.size()) != n_vehicles) {
    report.add(-1, "day record not sized to fleet");
    return report;
  }
  if (static_cast<int>(rec.prices.eur_per_kwh.size()) != T)
    report.add(-1, "price series not sized to grid");
  if (rec.weekday < 0 || rec.weekday > 6) report.add(-1, "weekday outside 0..6");
  for (int v = 0; v < n_vehicles; ++v) {
    if (static_cast<int>(rec.realized_alpha[v].size()) != T ||
        static_cast<int>(rec.realized_xi_kwh[v].size()) != T) {
      report.add(v, "day record row not sized to grid");
      continue;
    }
    for (int t = 0; t < T; ++t) {
      if (rec.realized_xi_kwh[v][t] < 0.0)
        report.add(v, "negative consumption at period " + std::to_string(t + 1));
      if (rec.realized_xi_kwh[v][t] > 0.0 && rec.realized_alpha[v][t] != 0)
        report.add(v, "vehicle marked available while moving at period " + std::to_string(t + 1));
      if (rec.realized_alpha[v][t] != 0 && rec.realized_alpha[v][t] != 1)
        report.add(v, "realized availability not binary at period " + std::to_string(t + 1));
    }
  }
  return report;
}

}  // namespace evagg
