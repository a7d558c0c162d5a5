#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "evagg/fleet.hpp"
#include "evagg/milp.hpp"
#include "evagg/mps.hpp"

namespace evagg {

/// Everything one day-ahead robust solve needs.
struct RobustInstance {
  std::vector<EvParams> fleet;
  TimeGrid grid;
  PriceSeries prices;
  std::vector<ForecastInputs> forecasts;
  std::vector<UncertaintySet> uncertainty;
  double penalty_eur_per_kwh = 1000.0;

  int n_vehicles() const { return static_cast<int>(fleet.size()); }

  std::string validate() const {
    const int V = n_vehicles();
    const int T = grid.n_periods;
    if (static_cast<int>(forecasts.size()) != V ||
        static_cast<int>(uncertainty.size()) != V)
      return "fleet, forecasts and uncertainty sets differ in length";
    if (static_cast<int>(prices.eur_per_kwh.size()) != T)
      return "price series not sized to the grid";
    for (double l : prices.eur_per_kwh)
      if (!std::isfinite(l)) return "non-finite price";
    if (!(penalty_eur_per_kwh >= 0.0)) return "negative penalty";
    const ValidationReport fleet_report = validate_fleet(fleet, grid, uncertainty);
    if (!fleet_report.ok()) return fleet_report.to_string();
    for (int v = 0; v < V; ++v) {
      const ForecastInputs& f = forecasts[v];
      if (static_cast<int>(f.alpha_hat.size()) != T ||
          static_cast<int>(f.xi_hat_kwh.size()) != T)
        return "vehicle " + std::to_string(v) + ": forecast not sized to the grid";
      for (int t = 0; t < T; ++t) {
        if (f.alpha_hat[t] < 0.0 || f.alpha_hat[t] > 1.0)
          return "vehicle " + std::to_string(v) + ": expected availability outside [0,1]";
        if (f.xi_hat_kwh[t] < 0.0)
          return "vehicle " + std::to_string(v) + ": negative expected consumption";
      }
    }
    return "";
  }
};

/// Minimizer of the lower level for a given charging plan, with its duals.
struct WorstCaseResult {
  std::vector<int> alpha;
  std::vector<double> alpha_relaxed;  // LP values before rounding
  double energy_kwh = 0.0;            // xi^wc
  double dual_k = 0.0;                // zeta
  std::vector<double> dual_lo;        // beta_lo >= 0
  std::vector<double> dual_hi;        // beta_hi <= 0
};

namespace detail {

inline void check_oracle_inputs(const std::vector<double>& charge_kw,
                                const TimeGrid& grid, const UncertaintySet& u) {
  const int T = grid.n_periods;
  if (static_cast<int>(charge_kw.size()) != T)
    throw ValidationError("worst case: charge vector not sized to the grid");
  for (double c : charge_kw)
    if (!(c >= -1e-9)) throw ValidationError("worst case: negative charge entry");
  if (static_cast<int>(u.alpha_lo.size()) != T ||
      static_cast<int>(u.alpha_hi.size()) != T)
    throw ValidationError("worst case: uncertainty set not sized to the grid");
  int sum_hi = 0;
  for (int t = 0; t < T; ++t) sum_hi += u.alpha_hi[t];
  if (sum_hi < u.k_min) throw ValidationError("empty uncertainty set: sum of alpha_hi below K");
}

}  // namespace detail

/// Exact combinatorial minimizer of sum_t dt*eta*c_t*alpha_t over the
/// availability set: start from alpha_lo and raise the cheapest free periods
/// until the cardinality floor K holds (ties to the lowest period).
inline WorstCaseResult worst_case_oracle(const std::vector<double>& charge_kw,
                                         const EvParams& ev, const TimeGrid& grid,
                                         const UncertaintySet& u) {
  detail::check_oracle_inputs(charge_kw, grid, u);
  const int T = grid.n_periods;
  const double rate = grid.dt_hours * ev.efficiency;

  std::vector<double> q(T);
  for (int t = 0; t < T; ++t) q[t] = rate * std::max(0.0, charge_kw[t]);

  WorstCaseResult wc;
  wc.alpha.assign(u.alpha_lo.begin(), u.alpha_lo.end());
  int forced = 0;
  for (int t = 0; t < T; ++t) forced += u.alpha_lo[t];
  const int need = std::max(0, u.k_min - forced);

  std::vector<int> free_idx;
  for (int t = 0; t < T; ++t)
    if (u.alpha_lo[t] == 0 && u.alpha_hi[t] == 1) free_idx.push_back(t);
  std::stable_sort(free_idx.begin(), free_idx.end(),
                   [&](int a, int b) { return q[a] != q[b] ? q[a] < q[b] : a < b; });
  for (int k = 0; k < need; ++k) wc.alpha[free_idx[k]] = 1;

  wc.dual_k = (need > 0) ? q[free_idx[need - 1]] : 0.0;
  wc.energy_kwh = 0.0;
  for (int t = 0; t < T; ++t)
    if (wc.alpha[t]) wc.energy_kwh += q[t];

  wc.dual_lo.assign(T, 0.0);
  wc.dual_hi.assign(T, 0.0);
  for (int t = 0; t < T; ++t) {
    wc.dual_hi[t] = std::min(0.0, q[t] - wc.dual_k);
    if (u.alpha_lo[t] == 1) wc.dual_lo[t] = std::max(0.0, q[t] - wc.dual_k);
  }
  wc.alpha_relaxed.assign(wc.alpha.begin(), wc.alpha.end());
  return wc;
}

/// Same problem through the LP relaxation; total unimodularity makes the
/// returned alpha integral. Duals come from the simplex.
inline WorstCaseResult worst_case_lp(const std::vector<double>& charge_kw,
                                     const EvParams& ev, const TimeGrid& grid,
                                     const UncertaintySet& u,
                                     const SimplexOptions& opt = {}) {
  detail::check_oracle_inputs(charge_kw, grid, u);
  const int T = grid.n_periods;
  const double rate = grid.dt_hours * ev.efficiency;

  LpProblem p;
  std::vector<std::pair<int, double>> card;
  for (int t = 0; t < T; ++t) {
    p.add_var("a_" + std::to_string(t + 1), u.alpha_lo[t], u.alpha_hi[t],
              rate * std::max(0.0, charge_kw[t]));
    card.push_back({t, 1.0});
  }
  p.add_row(Relation::ge, u.k_min, card, "card");

  LpSolution s = solve_lp(p, opt);
  if (s.status != LpStatus::optimal)
    throw SolverError("worst-case LP not optimal (status " +
                      std::to_string(static_cast<int>(s.status)) + ")");

  WorstCaseResult wc;
  wc.alpha_relaxed = s.x;
  wc.alpha.resize(T);
  for (int t = 0; t < T; ++t) wc.alpha[t] = static_cast<int>(std::lround(s.x[t]));
  wc.energy_kwh = s.objective;
  wc.dual_k = dual_value(s, 0);
  wc.dual_lo.assign(T, 0.0);
  wc.dual_hi.assign(T, 0.0);
  for (int t = 0; t < T; ++t) {
    wc.dual_lo[t] = std::max(0.0, s.reduced_cost[t]);
    wc.dual_hi[t] = std::min(0.0, s.reduced_cost[t]);
  }
  return wc;
}

struct RobustOptions {
  double gap_target = 0.0;
  long node_limit = -1;
  SimplexOptions lp;
  double ccg_tol = 1e-7;
  int ccg_iter_cap = 0;        // 0 -> 2*T
  double bigm_scale = 1.0;     // deliberate-fault hook used by the verify suite
  std::string dump_mps_dir;    // when set, each vehicle MILP is exported here
};

namespace detail {

// Variable layout of the per-vehicle single-level program.
struct SingleLevelLayout {
  int T;
  int c(int t) const { return t; }
  int e(int t) const { return T + t; }
  int sp(int t) const { return 2 * T + t; }
  int sn(int t) const { return 3 * T + t; }
  int z(int t) const { return 4 * T + t; }
  int a(int t) const { return 5 * T + t; }
  int bl(int t) const { return 6 * T + t; }
  int bh(int t) const { return 7 * T + t; }
  int zeta() const { return 8 * T; }
};

}  // namespace detail

/// Single-level MILP for one vehicle: SOC balance in z-form, the lower-level
/// primal and dual feasibility, the strong-duality equality tying the dual
/// objective to sum_t dt*eta*z_t, the demand requirement on the dual
/// objective, and the exact big-M product linearization with M = C_max.
inline MilpProblem build_single_level(const RobustInstance& inst, int v,
                                      const RobustOptions& opt = {}) {
  const std::string issue = inst.validate();
  if (!issue.empty()) throw ValidationError("robust instance invalid: " + issue);
  if (v < 0 || v >= inst.n_vehicles()) throw ValidationError("vehicle index out of range");

  const int T = inst.grid.n_periods;
  const EvParams& ev = inst.fleet[v];
  const UncertaintySet& u = inst.uncertainty[v];
  const ForecastInputs& fc = inst.forecasts[v];
  const double dt = inst.grid.dt_hours;
  const double rate = dt * ev.efficiency;
  const double penalty = inst.penalty_eur_per_kwh;
  const double big_m = ev.max_charge_kw * opt.bigm_scale;
  const double xi_total = std::accumulate(fc.xi_hat_kwh.begin(), fc.xi_hat_kwh.end(), 0.0);

  MilpProblem out;
  LpProblem& lp = out.lp;
  const detail::SingleLevelLayout ix{T};

  for (int t = 0; t < T; ++t)
    lp.add_var("c_" + std::to_string(t + 1), 0.0, ev.max_charge_kw,
               inst.prices.eur_per_kwh[t] * dt);
  for (int t = 0; t < T; ++t) {
    const bool last = (t == T - 1);
    lp.add_var("e_" + std::to_string(t + 1), last ? ev.e_init_kwh : ev.e_min_kwh,
               last ? ev.e_init_kwh : ev.e_max_kwh, 0.0);
  }
  for (int t = 0; t < T; ++t) lp.add_var("sp_" + std::to_string(t + 1), 0.0, kInf, penalty);
  for (int t = 0; t < T; ++t) lp.add_var("sn_" + std::to_string(t + 1), 0.0, kInf, penalty);
  for (int t = 0; t < T; ++t) lp.add_var("z_" + std::to_string(t + 1), 0.0, ev.max_charge_kw, 0.0);
  for (int t = 0; t < T; ++t) {
    lp.add_var("a_" + std::to_string(t + 1), u.alpha_lo[t], u.alpha_hi[t], 0.0);
    out.binary_vars.push_back(ix.a(t));
  }
  for (int t = 0; t < T; ++t) lp.add_var("bl_" + std::to_string(t + 1), 0.0, kInf, 0.0);
  for (int t = 0; t < T; ++t) lp.add_var("bh_" + std::to_string(t + 1), -kInf, 0.0, 0.0);
  lp.add_var("zeta", 0.0, kInf, 0.0);

  // SOC balance with the linearized product z.
  for (int t = 0; t < T; ++t) {
    std::vector<std::pair<int, double>> coeffs{{ix.e(t), 1.0},
                                               {ix.z(t), -rate},
                                               {ix.sp(t), -1.0},
                                               {ix.sn(t), 1.0}};
    double rhs = -fc.xi_hat_kwh[t];
    if (t == 0)
      rhs += ev.e_init_kwh;
    else
      coeffs.push_back({ix.e(t - 1), -1.0});
    lp.add_row(Relation::eq, rhs, coeffs, "bal_" + std::to_string(t + 1));
  }
  // Dual feasibility of the lower level for the plan c.
  for (int t = 0; t < T; ++t)
    lp.add_row(Relation::le, 0.0,
               {{ix.zeta(), 1.0}, {ix.bl(t), 1.0}, {ix.bh(t), 1.0}, {ix.c(t), -rate}},
               "dual_" + std::to_string(t + 1));
  // Product linearization: 0 <= z <= alpha*M and 0 <= c - z <= (1-alpha)*M.
  for (int t = 0; t < T; ++t)
    lp.add_row(Relation::le, 0.0, {{ix.z(t), 1.0}, {ix.a(t), -big_m}},
               "zcap_" + std::to_string(t + 1));
  for (int t = 0; t < T; ++t)
    lp.add_row(Relation::ge, 0.0, {{ix.c(t), 1.0}, {ix.z(t), -1.0}},
               "czlo_" + std::to_string(t + 1));
  for (int t = 0; t < T; ++t)
    lp.add_row(Relation::le, big_m, {{ix.c(t), 1.0}, {ix.z(t), -1.0}, {ix.a(t), big_m}},
               "czup_" + std::to_string(t + 1));
  // Lower-level primal feasibility: cardinality floor (box is in the bounds).
  {
    std::vector<std::pair<int, double>> coeffs;
    for (int t = 0; t < T; ++t) coeffs.push_back({ix.a(t), 1.0});
    lp.add_row(Relation::ge, u.k_min, coeffs, "card");
  }
  // Strong duality in z-form, and the robust demand on the dual objective.
  {
    std::vector<std::pair<int, double>> sd{{ix.zeta(), static_cast<double>(u.k_min)}};
    std::vector<std::pair<int, double>> dem{{ix.zeta(), static_cast<double>(u.k_min)}};
    for (int t = 0; t < T; ++t) {
      if (u.alpha_lo[t]) {
        sd.push_back({ix.bl(t), 1.0});
        dem.push_back({ix.bl(t), 1.0});
      }
      if (u.alpha_hi[t]) {
        sd.push_back({ix.bh(t), 1.0});
        dem.push_back({ix.bh(t), 1.0});
      }
      sd.push_back({ix.z(t), -rate});
    }
    lp.add_row(Relation::eq, 0.0, sd, "sd");
    lp.add_row(Relation::ge, xi_total, dem, "dem");
  }
  return out;
}

namespace detail {

inline void size_solution(ScheduleSolution& sol, int V, int T) {
  sol.charge_kw.assign(V, std::vector<double>(T, 0.0));
  sol.linear_charge_kw.assign(V, std::vector<double>(T, 0.0));
  sol.soc_kwh.assign(V, std::vector<double>(T, 0.0));
  sol.slack_pos_kwh.assign(V, std::vector<double>(T, 0.0));
  sol.slack_neg_kwh.assign(V, std::vector<double>(T, 0.0));
  sol.wc_alpha.assign(V, std::vector<int>(T, 0));
  sol.wc_energy_kwh.assign(V, 0.0);
  sol.dual_k.assign(V, 0.0);
  sol.dual_lo.assign(V, std::vector<double>(T, 0.0));
  sol.dual_hi.assign(V, std::vector<double>(T, 0.0));
  sol.objective_eur = 0.0;
}

}  // namespace detail

/// Solves the robust model, one MILP per vehicle (the program is separable
/// over vehicles), and assembles the fleet solution in vehicle order.
inline ScheduleSolution solve_robust(const RobustInstance& inst,
                                     const RobustOptions& opt = {}) {
  const std::string issue = inst.validate();
  if (!issue.empty()) throw ValidationError("robust instance invalid: " + issue);
  const int V = inst.n_vehicles();
  const int T = inst.grid.n_periods;

  ScheduleSolution sol;
  detail::size_solution(sol, V, T);

  parallel_for(V, [&](int v) {
    MilpProblem p = build_single_level(inst, v, opt);
    if (!opt.dump_mps_dir.empty())
      write_mps_file(p, opt.dump_mps_dir + "/vehicle_" + std::to_string(v) + ".mps",
                     "ROEV_V" + std::to_string(v));
    MilpSolution ms;
    try {
      ms = solve_milp(p, opt.gap_target, opt.node_limit, opt.lp);
    } catch (const Error& e) {
      throw SolverError("vehicle " + std::to_string(v) + ": " + e.what());
    }
    if (ms.status == MilpStatus::infeasible)
      throw SolverError("vehicle " + std::to_string(v) +
                        ": robust demand unsatisfiable (MILP infeasible)");
    const detail::SingleLevelLayout ix{T};
    const double rate = inst.grid.dt_hours * inst.fleet[v].efficiency;
    double wc_energy = 0.0;
    for (int t = 0; t < T; ++t) {
      sol.charge_kw[v][t] = ms.x[ix.c(t)];
      sol.soc_kwh[v][t] = ms.x[ix.e(t)];
      sol.slack_pos_kwh[v][t] = ms.x[ix.sp(t)];
      sol.slack_neg_kwh[v][t] = ms.x[ix.sn(t)];
      sol.linear_charge_kw[v][t] = ms.x[ix.z(t)];
      sol.wc_alpha[v][t] = static_cast<int>(std::lround(ms.x[ix.a(t)]));
      sol.dual_lo[v][t] = ms.x[ix.bl(t)];
      sol.dual_hi[v][t] = ms.x[ix.bh(t)];
      wc_energy += rate * ms.x[ix.z(t)];
    }
    sol.dual_k[v] = ms.x[ix.zeta()];
    sol.wc_energy_kwh[v] = wc_energy;
  });

  double objective = 0.0;
  const double dt = inst.grid.dt_hours;
  for (int v = 0; v < V; ++v)
    for (int t = 0; t < T; ++t)
      objective += inst.prices.eur_per_kwh[t] * dt * sol.charge_kw[v][t] +
                   inst.penalty_eur_per_kwh *
                       (sol.slack_pos_kwh[v][t] + sol.slack_neg_kwh[v][t]);
  sol.objective_eur = objective;
  return sol;
}

/// Column-and-constraint generation alternative: a master LP over c/e/s with
/// one demand cut per collected availability pattern, against the exact
/// worst-case oracle. The master's SOC balance uses the most recently
/// violated pattern; iteration also continues while that pattern is not a
/// lower-level minimizer of the current plan, so the returned certificate is
/// consistent.
inline ScheduleSolution solve_robust_ccg(const RobustInstance& inst,
                                         const RobustOptions& opt = {}) {
  const std::string issue = inst.validate();
  if (!issue.empty()) throw ValidationError("robust instance invalid: " + issue);
  const int V = inst.n_vehicles();
  const int T = inst.grid.n_periods;
  const double dt = inst.grid.dt_hours;
  const double tol = opt.ccg_tol;
  const int iter_cap = opt.ccg_iter_cap > 0 ? opt.ccg_iter_cap : 2 * T;

  ScheduleSolution sol;
  detail::size_solution(sol, V, T);

  parallel_for(V, [&](int v) {
    const EvParams& ev = inst.fleet[v];
    const ForecastInputs& fc = inst.forecasts[v];
    const UncertaintySet& u = inst.uncertainty[v];
    const double rate = dt * ev.efficiency;
    const double xi_total = std::accumulate(fc.xi_hat_kwh.begin(), fc.xi_hat_kwh.end(), 0.0);

    std::vector<std::vector<int>> patterns{u.alpha_hi};
    std::vector<int> balance_pattern = u.alpha_hi;

    auto solve_master = [&](LpSolution& out) {
      LpProblem p;
      for (int t = 0; t < T; ++t)
        p.add_var("c_" + std::to_string(t + 1), 0.0, ev.max_charge_kw,
                  inst.prices.eur_per_kwh[t] * dt);
      for (int t = 0; t < T; ++t) {
        const bool last = (t == T - 1);
        p.add_var("e_" + std::to_string(t + 1), last ? ev.e_init_kwh : ev.e_min_kwh,
                  last ? ev.e_init_kwh : ev.e_max_kwh, 0.0);
      }
      for (int t = 0; t < T; ++t)
        p.add_var("sp_" + std::to_string(t + 1), 0.0, kInf, inst.penalty_eur_per_kwh);
      for (int t = 0; t < T; ++t)
        p.add_var("sn_" + std::to_string(t + 1), 0.0, kInf, inst.penalty_eur_per_kwh);
      for (int t = 0; t < T; ++t) {
        std::vector<std::pair<int, double>> coeffs{{T + t, 1.0},
                                                   {2 * T + t, -1.0},
                                                   {3 * T + t, 1.0}};
        if (balance_pattern[t]) coeffs.push_back({t, -rate});
        double rhs = -fc.xi_hat_kwh[t];
        if (t == 0)
          rhs += ev.e_init_kwh;
        else
          coeffs.push_back({T + t - 1, -1.0});
        p.add_row(Relation::eq, rhs, coeffs, "bal_" + std::to_string(t + 1));
      }
      for (size_t k = 0; k < patterns.size(); ++k) {
        std::vector<std::pair<int, double>> cut;
        for (int t = 0; t < T; ++t)
          if (patterns[k][t]) cut.push_back({t, rate});
        p.add_row(Relation::ge, xi_total, cut, "cut_" + std::to_string(k + 1));
      }
      out = solve_lp(p, opt.lp);
      if (out.status != LpStatus::optimal)
        throw SolverError("vehicle " + std::to_string(v) +
                          ": CCG master not optimal (robust demand unsatisfiable)");
    };

    LpSolution master;
    WorstCaseResult wc;
    bool converged = false;
    for (int iter = 0; iter < iter_cap; ++iter) {
      solve_master(master);
      std::vector<double> c(master.x.begin(), master.x.begin() + T);
      wc = worst_case_oracle(c, ev, inst.grid, u);
      double delivered_balance = 0.0;
      for (int t = 0; t < T; ++t)
        if (balance_pattern[t]) delivered_balance += rate * c[t];
      const bool demand_ok = wc.energy_kwh >= xi_total - tol;
      const bool balance_ok = delivered_balance <= wc.energy_kwh + tol;
      if (demand_ok && balance_ok) {
        converged = true;
        break;
      }
      if (std::find(patterns.begin(), patterns.end(), wc.alpha) == patterns.end())
        patterns.push_back(wc.alpha);
      balance_pattern = wc.alpha;
    }
    if (!converged)
      throw SolverError("vehicle " + std::to_string(v) + ": CCG iteration cap (" +
                        std::to_string(iter_cap) + ") exceeded; best objective " +
                        std::to_string(master.objective));

    double wc_energy = 0.0;
    for (int t = 0; t < T; ++t) {
      sol.charge_kw[v][t] = master.x[t];
      sol.soc_kwh[v][t] = master.x[T + t];
      sol.slack_pos_kwh[v][t] = master.x[2 * T + t];
      sol.slack_neg_kwh[v][t] = master.x[3 * T + t];
      const double z = balance_pattern[t] ? master.x[t] : 0.0;
      sol.linear_charge_kw[v][t] = z;
      sol.wc_alpha[v][t] = balance_pattern[t];
      wc_energy += rate * z;
    }
    sol.wc_energy_kwh[v] = wc_energy;
    sol.dual_k[v] = wc.dual_k;
    sol.dual_lo[v] = wc.dual_lo;
    sol.dual_hi[v] = wc.dual_hi;
  });

  double objective = 0.0;
  for (int v = 0; v < V; ++v)
    for (int t = 0; t < T; ++t)
      objective += inst.prices.eur_per_kwh[t] * dt * sol.charge_kw[v][t] +
                   inst.penalty_eur_per_kwh *
                       (sol.slack_pos_kwh[v][t] + sol.slack_neg_kwh[v][t]);
  sol.objective_eur = objective;
  return sol;
}

inline ScheduleSolution solve_robust_ccg(const RobustInstance& inst, double tol) {
  RobustOptions opt;
  opt.ccg_tol = tol;
  return solve_robust_ccg(inst, opt);
}

}  // namespace evagg
