#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "evagg/robust.hpp"

namespace evagg {

namespace detail {

// One vehicle of the expected-value model: variables c, e, s+, s- (T each).
// The expected availability enters only the charging cap.
inline LpProblem build_deterministic_block(const RobustInstance& inst, int v) {
  const int T = inst.grid.n_periods;
  const EvParams& ev = inst.fleet[v];
  const ForecastInputs& fc = inst.forecasts[v];
  const double dt = inst.grid.dt_hours;
  const double rate = dt * ev.efficiency;

  LpProblem p;
  for (int t = 0; t < T; ++t)
    p.add_var("c_" + std::to_string(t + 1), 0.0, ev.max_charge_kw * fc.alpha_hat[t],
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
                                               {t, -rate},
                                               {2 * T + t, -1.0},
                                               {3 * T + t, 1.0}};
    double rhs = -fc.xi_hat_kwh[t];
    if (t == 0)
      rhs += ev.e_init_kwh;
    else
      coeffs.push_back({T + t - 1, -1.0});
    p.add_row(Relation::eq, rhs, coeffs, "bal_" + std::to_string(t + 1));
  }
  return p;
}

}  // namespace detail

/// Whole-fleet LP of the deterministic baseline (vehicle-major variable
/// blocks); mainly for inspection and MPS export. Solving goes per vehicle.
inline LpProblem build_deterministic(const RobustInstance& inst) {
  const std::string issue = inst.validate();
  if (!issue.empty()) throw ValidationError("instance invalid: " + issue);
  LpProblem all;
  for (int v = 0; v < inst.n_vehicles(); ++v) {
    LpProblem block = detail::build_deterministic_block(inst, v);
    const int offset = all.n_vars();
    const std::string tag = "v" + std::to_string(v + 1) + "_";
    for (int j = 0; j < block.n_vars(); ++j)
      all.add_var(tag + block.var_names[j], block.lo[j], block.hi[j], block.cost[j]);
    for (const LpRow& row : block.rows) {
      std::vector<std::pair<int, double>> coeffs;
      for (const auto& [j, a] : row.coeffs) coeffs.push_back({j + offset, a});
      all.add_row(row.rel, row.rhs, coeffs, tag + row.name);
    }
  }
  return all;
}

/// DO-EV baseline solve. The worst-case fields of the result are zeroed and
/// wc_energy carries the total expected consumption; z mirrors c since the
/// balance uses the full charging power.
inline ScheduleSolution solve_deterministic(const RobustInstance& inst,
                                            const RobustOptions& opt = {}) {
  const std::string issue = inst.validate();
  if (!issue.empty()) throw ValidationError("instance invalid: " + issue);
  const int V = inst.n_vehicles();
  const int T = inst.grid.n_periods;

  ScheduleSolution sol;
  detail::size_solution(sol, V, T);

  parallel_for(V, [&](int v) {
    LpProblem p = detail::build_deterministic_block(inst, v);
    if (!opt.dump_mps_dir.empty())
      write_mps_file(MilpProblem{p, {}},
                     opt.dump_mps_dir + "/vehicle_" + std::to_string(v) + ".mps",
                     "DOEV_V" + std::to_string(v));
    LpSolution s;
    try {
      s = solve_lp(p, opt.lp);
    } catch (const Error& e) {
      throw SolverError("vehicle " + std::to_string(v) + ": " + e.what());
    }
    if (s.status != LpStatus::optimal)
      throw SolverError("vehicle " + std::to_string(v) + ": deterministic LP not optimal");
    for (int t = 0; t < T; ++t) {
      sol.charge_kw[v][t] = s.x[t];
      sol.linear_charge_kw[v][t] = s.x[t];
      sol.soc_kwh[v][t] = s.x[T + t];
      sol.slack_pos_kwh[v][t] = s.x[2 * T + t];
      sol.slack_neg_kwh[v][t] = s.x[3 * T + t];
    }
    sol.wc_energy_kwh[v] = std::accumulate(inst.forecasts[v].xi_hat_kwh.begin(),
                                           inst.forecasts[v].xi_hat_kwh.end(), 0.0);
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

}  // namespace evagg
