#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "evagg/data.hpp"
#include "evagg/deterministic.hpp"
#include "evagg/robust.hpp"

namespace evagg {

/// Result of re-dispatching a fixed aggregate purchase against a realization.
struct RealtimeOutcome {
  std::vector<std::vector<double>> allocation_kw;  // a[v][t]
  std::vector<double> deviation_kwh;               // per-vehicle sum of |slacks|
  double d_rt_kwh = 0.0;
  double penalty_cost_eur = 0.0;
};

/// Day-level comparison metrics (Table-I style).
struct DayMetrics {
  double c_da_eur = 0.0;   // day-ahead cost
  double p_da_kw = 0.0;    // day-ahead purchased power, summed over periods
  double d_rt_kwh = 0.0;   // real-time energy deviations
};

enum class Method { robust, deterministic };

inline const char* method_name(Method m) {
  return m == Method::robust ? "robust" : "deterministic";
}

/// One LP over the whole fleet: allocate the purchased power per period to
/// the vehicles that are actually present, minimizing the penalized battery
/// balance slacks. Unused purchased power is curtailed at no extra cost.
inline RealtimeOutcome simulate_realtime(const ScheduleSolution& schedule,
                                         const DayRecord& realized,
                                         const RobustInstance& inst,
                                         const SimplexOptions& lp_opt = {}) {
  const int V = inst.n_vehicles();
  const int T = inst.grid.n_periods;
  if (static_cast<int>(schedule.charge_kw.size()) != V ||
      static_cast<int>(realized.realized_alpha.size()) != V)
    throw ValidationError("realtime: dimensions do not match the instance");

  std::vector<double> purchased(T, 0.0);
  for (int v = 0; v < V; ++v)
    for (int t = 0; t < T; ++t) purchased[t] += std::max(0.0, schedule.charge_kw[v][t]);

  // Vehicle-major blocks: a, e, s+, s- (T each); then T aggregate cap rows.
  LpProblem p;
  const double penalty = inst.penalty_eur_per_kwh;
  auto a_ix = [&](int v, int t) { return 4 * T * v + t; };
  auto e_ix = [&](int v, int t) { return 4 * T * v + T + t; };
  auto sp_ix = [&](int v, int t) { return 4 * T * v + 2 * T + t; };
  auto sn_ix = [&](int v, int t) { return 4 * T * v + 3 * T + t; };

  for (int v = 0; v < V; ++v) {
    const EvParams& ev = inst.fleet[v];
    for (int t = 0; t < T; ++t)
      p.add_var("a", 0.0, realized.realized_alpha[v][t] ? ev.max_charge_kw : 0.0, 0.0);
    for (int t = 0; t < T; ++t) {
      const bool last = (t == T - 1);
      p.add_var("e", last ? ev.e_init_kwh : ev.e_min_kwh,
                last ? ev.e_init_kwh : ev.e_max_kwh, 0.0);
    }
    for (int t = 0; t < T; ++t) p.add_var("sp", 0.0, kInf, penalty);
    for (int t = 0; t < T; ++t) p.add_var("sn", 0.0, kInf, penalty);
  }
  for (int v = 0; v < V; ++v) {
    const EvParams& ev = inst.fleet[v];
    const double rate = inst.grid.dt_hours * ev.efficiency;
    for (int t = 0; t < T; ++t) {
      std::vector<std::pair<int, double>> coeffs{{e_ix(v, t), 1.0},
                                                 {a_ix(v, t), -rate},
                                                 {sp_ix(v, t), -1.0},
                                                 {sn_ix(v, t), 1.0}};
      double rhs = -realized.realized_xi_kwh[v][t];
      if (t == 0)
        rhs += ev.e_init_kwh;
      else
        coeffs.push_back({e_ix(v, t - 1), -1.0});
      p.add_row(Relation::eq, rhs, coeffs);
    }
  }
  for (int t = 0; t < T; ++t) {
    std::vector<std::pair<int, double>> cap;
    for (int v = 0; v < V; ++v) cap.push_back({a_ix(v, t), 1.0});
    p.add_row(Relation::le, purchased[t], cap, "cap_" + std::to_string(t + 1));
  }

  LpSolution s = solve_lp(p, lp_opt);
  if (s.status != LpStatus::optimal)
    throw SolverError("realtime dispatch LP not optimal");

  RealtimeOutcome out;
  out.allocation_kw.assign(V, std::vector<double>(T, 0.0));
  out.deviation_kwh.assign(V, 0.0);
  for (int v = 0; v < V; ++v) {
    double dev = 0.0;
    for (int t = 0; t < T; ++t) {
      out.allocation_kw[v][t] = s.x[a_ix(v, t)];
      dev += s.x[sp_ix(v, t)] + s.x[sn_ix(v, t)];
    }
    out.deviation_kwh[v] = dev;
    out.d_rt_kwh += dev;
  }
  out.penalty_cost_eur = penalty * out.d_rt_kwh;
  return out;
}

/// Day-ahead instance for `history[day_pos]`, built from the strictly earlier
/// records: expected values over the last `lookback` same-weekday days,
/// prices over the last `lookback` calendar days, and availability boxes from
/// the same-weekday slice.
inline RobustInstance instance_for_day(const std::vector<DayRecord>& history,
                                       int day_pos, const std::vector<EvParams>& fleet,
                                       const TimeGrid& grid, int lookback = 4,
                                       double penalty_eur_per_kwh = 1000.0) {
  if (day_pos < 0 || day_pos >= static_cast<int>(history.size()))
    throw ValidationError("day position out of range");
  const std::vector<DayRecord> past(history.begin(), history.begin() + day_pos);
  const int target_weekday = history[day_pos].weekday;

  RobustInstance inst;
  inst.fleet = fleet;
  inst.grid = grid;
  inst.penalty_eur_per_kwh = penalty_eur_per_kwh;

  ForecastResult fc = forecast(past, target_weekday, lookback);
  inst.forecasts = std::move(fc.per_vehicle);
  inst.prices = std::move(fc.prices);

  std::vector<const DayRecord*> slice;
  for (const DayRecord& rec : past)
    if (rec.weekday == target_weekday) slice.push_back(&rec);
  slice.erase(slice.begin(), slice.end() - lookback);
  for (int v = 0; v < static_cast<int>(fleet.size()); ++v)
    inst.uncertainty.push_back(build_uncertainty_set(slice, v));

  const std::string issue = inst.validate();
  if (!issue.empty()) throw ValidationError("built instance invalid: " + issue);
  return inst;
}

/// Solves the chosen day-ahead model and validates it against the realized
/// day: C_DA and P_DA from the schedule, D_RT from the dispatch LP.
inline DayMetrics evaluate_day(const RobustInstance& inst, Method method,
                               const DayRecord& realized,
                               const RobustOptions& opt = {}) {
  const ScheduleSolution schedule = (method == Method::robust)
                                        ? solve_robust(inst, opt)
                                        : solve_deterministic(inst, opt);
  const RealtimeOutcome outcome = simulate_realtime(schedule, realized, inst, opt.lp);

  DayMetrics m;
  const double dt = inst.grid.dt_hours;
  for (int v = 0; v < inst.n_vehicles(); ++v)
    for (int t = 0; t < inst.grid.n_periods; ++t) {
      m.c_da_eur += inst.prices.eur_per_kwh[t] * schedule.charge_kw[v][t] * dt;
      m.p_da_kw += schedule.charge_kw[v][t];
    }
  m.d_rt_kwh = outcome.d_rt_kwh;
  return m;
}

/// Table-II style aggregates over a month of day metrics.
struct MethodAggregate {
  double c_da_total_eur = 0.0;
  double d_rt_max_kwh = 0.0;
  double d_rt_mean_kwh = 0.0;
  double d_rt_min_kwh = 0.0;
  double d_rt_total_kwh = 0.0;
};

inline MethodAggregate aggregate_metrics(const std::vector<DayMetrics>& days) {
  MethodAggregate agg;
  if (days.empty()) return agg;
  agg.d_rt_min_kwh = kInf;
  for (const DayMetrics& m : days) {
    agg.c_da_total_eur += m.c_da_eur;
    agg.d_rt_total_kwh += m.d_rt_kwh;
    agg.d_rt_max_kwh = std::max(agg.d_rt_max_kwh, m.d_rt_kwh);
    agg.d_rt_min_kwh = std::min(agg.d_rt_min_kwh, m.d_rt_kwh);
  }
  agg.d_rt_mean_kwh = agg.d_rt_total_kwh / static_cast<double>(days.size());
  return agg;
}

struct MonthConfig {
  std::vector<EvParams> fleet;
  TimeGrid grid;
  int n_eval_days = 29;
  int lookback = 4;
  double penalty_eur_per_kwh = 1000.0;
  bool run_robust = true;
  bool run_deterministic = true;
  RobustOptions solver;
};

struct MonthReport {
  std::vector<int> day_indices;  // date_index of each evaluated day
  std::vector<DayMetrics> robust_days;
  std::vector<DayMetrics> deterministic_days;
  MethodAggregate robust_total;
  MethodAggregate deterministic_total;
};

/// Rolling-horizon backtest over the last `n_eval_days` of the history:
/// forecast from the strict past, solve the selected day-ahead models,
/// dispatch against the realization, record per-day metrics and aggregates.
inline MonthReport evaluate_month(const std::vector<DayRecord>& history,
                                  const MonthConfig& cfg) {
  const int n_days = static_cast<int>(history.size());
  if (cfg.n_eval_days < 1) throw ValidationError("no days selected for evaluation");
  if (cfg.n_eval_days > n_days)
    throw DataError("insufficient history: " + std::to_string(n_days) +
                    " day(s) for " + std::to_string(cfg.n_eval_days) + " evaluations");
  const int first = n_days - cfg.n_eval_days;

  MonthReport report;
  for (int pos = first; pos < n_days; ++pos) {
    const RobustInstance inst =
        instance_for_day(history, pos, cfg.fleet, cfg.grid, cfg.lookback,
                         cfg.penalty_eur_per_kwh);
    report.day_indices.push_back(history[pos].date_index);
    if (cfg.run_robust)
      report.robust_days.push_back(
          evaluate_day(inst, Method::robust, history[pos], cfg.solver));
    if (cfg.run_deterministic)
      report.deterministic_days.push_back(
          evaluate_day(inst, Method::deterministic, history[pos], cfg.solver));
  }
  report.robust_total = aggregate_metrics(report.robust_days);
  report.deterministic_total = aggregate_metrics(report.deterministic_days);
  return report;
}

}  // namespace evagg
