#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "evagg/data.hpp"
#include "evagg/instances.hpp"
#include "evagg/realtime.hpp"
#include "evagg/rng.hpp"

namespace evagg {

/// Parsed command line shared by the subcommands.
struct RunConfig {
  std::string command;
  std::string config_path;
  std::string history_path;
  std::string prices_path;
  std::string out_dir = ".";
  std::string method = "both";  // robust | deterministic | both
  std::uint64_t seed = 1;
  bool seed_set = false;
  int lookback = 4;
  double penalty = 1000.0;
  double gap = 0.0;
  std::string dump_mps_dir;
  int day = -1;      // solve: date index, default the last day
  int days = 29;     // month: number of evaluated days
  int vehicles = 0;  // 0 = all
  double bigm_scale = 1.0;  // verify: deliberate big-M fault injection
  int verify_oracle_trials = 200;
  int verify_solve_trials = 20;
};

namespace detail {

inline void require_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir + ": " + ec.message());
}

inline std::string joined(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline bool want_robust(const RunConfig& rc) {
  return rc.method == "robust" || rc.method == "both";
}
inline bool want_deterministic(const RunConfig& rc) {
  return rc.method == "deterministic" || rc.method == "both";
}

inline void check_method(const RunConfig& rc) {
  if (rc.method != "robust" && rc.method != "deterministic" && rc.method != "both")
    throw ValidationError("method must be robust, deterministic or both");
}

inline GeneratorConfig load_config(const RunConfig& rc) {
  GeneratorConfig cfg;
  if (!rc.config_path.empty()) cfg = GeneratorConfig::from_file(rc.config_path);
  if (rc.seed_set) cfg.seed = rc.seed;
  return cfg;
}

struct LoadedData {
  std::vector<DayRecord> history;
  std::vector<EvParams> fleet;
  TimeGrid grid;
};

inline LoadedData load_data(const RunConfig& rc) {
  const std::string history_path =
      rc.history_path.empty() ? joined(rc.out_dir, "history.csv") : rc.history_path;
  const std::string prices_path =
      rc.prices_path.empty() ? joined(rc.out_dir, "prices.csv") : rc.prices_path;
  LoadedData data;
  data.history = load_history_csv(history_path, prices_path);
  const int V = static_cast<int>(data.history.front().realized_alpha.size());
  const int T = static_cast<int>(data.history.front().prices.eur_per_kwh.size());

  GeneratorConfig cfg = load_config(rc);
  data.grid = TimeGrid{T, cfg.dt_hours};
  data.fleet.assign(V, cfg.ev_params());

  if (rc.vehicles != 0) {
    if (rc.vehicles < 0 || rc.vehicles > V)
      throw ValidationError("vehicle filter selects an empty or oversized fleet (" +
                            std::to_string(rc.vehicles) + " of " + std::to_string(V) + ")");
    data.fleet.resize(rc.vehicles);
    for (DayRecord& rec : data.history) {
      rec.realized_alpha.resize(rc.vehicles);
      rec.realized_xi_kwh.resize(rc.vehicles);
    }
  }
  return data;
}

inline RobustOptions solver_options(const RunConfig& rc, const std::string& subdir) {
  RobustOptions opt;
  opt.gap_target = rc.gap;
  opt.bigm_scale = rc.bigm_scale;
  if (!rc.dump_mps_dir.empty()) {
    opt.dump_mps_dir = joined(rc.dump_mps_dir, subdir);
    require_out_dir(opt.dump_mps_dir);
  }
  return opt;
}

inline void write_schedule_csv(const std::string& path, const ScheduleSolution& sol) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path + " for writing");
  os << "vehicle,period,c_kw,z_kw,e_kwh,s_plus,s_minus,alpha_wc\n";
  for (size_t v = 0; v < sol.charge_kw.size(); ++v)
    for (size_t t = 0; t < sol.charge_kw[v].size(); ++t)
      os << v << ',' << t + 1 << ',' << csv_double(sol.charge_kw[v][t]) << ','
         << csv_double(sol.linear_charge_kw[v][t]) << ','
         << csv_double(sol.soc_kwh[v][t]) << ','
         << csv_double(sol.slack_pos_kwh[v][t]) << ','
         << csv_double(sol.slack_neg_kwh[v][t]) << ',' << sol.wc_alpha[v][t] << "\n";
  os.flush();
  if (!os) throw DataError("write failure on " + path);
}

inline DayMetrics schedule_metrics(const RobustInstance& inst,
                                   const ScheduleSolution& sol, double d_rt) {
  DayMetrics m;
  for (int v = 0; v < inst.n_vehicles(); ++v)
    for (int t = 0; t < inst.grid.n_periods; ++t) {
      m.c_da_eur += inst.prices.eur_per_kwh[t] * sol.charge_kw[v][t] * inst.grid.dt_hours;
      m.p_da_kw += sol.charge_kw[v][t];
    }
  m.d_rt_kwh = d_rt;
  return m;
}

}  // namespace detail

/// generate: seeded synthetic history plus prices, as the two CSV schemas.
inline int cmd_generate(const RunConfig& rc) {
  const GeneratorConfig cfg = detail::load_config(rc);
  detail::require_out_dir(rc.out_dir);
  const auto history = generate_history(cfg, cfg.fleet());
  save_history_csv(history, detail::joined(rc.out_dir, "history.csv"),
                   detail::joined(rc.out_dir, "prices.csv"));
  std::cout << "generated " << cfg.n_days << " day(s) x " << cfg.n_vehicles
            << " vehicle(s) x " << cfg.n_periods << " period(s) into " << rc.out_dir
            << "\n";
  return 0;
}

/// solve: one day-ahead problem, schedule CSV plus objective summary per method.
inline int cmd_solve(const RunConfig& rc) {
  detail::check_method(rc);
  detail::require_out_dir(rc.out_dir);
  detail::LoadedData data = detail::load_data(rc);

  int pos = static_cast<int>(data.history.size()) - 1;
  if (rc.day >= 0) {
    pos = -1;
    for (size_t i = 0; i < data.history.size(); ++i)
      if (data.history[i].date_index == rc.day) pos = static_cast<int>(i);
    if (pos < 0) throw DataError("day " + std::to_string(rc.day) + " not in the history");
  }

  const RobustInstance inst = instance_for_day(data.history, pos, data.fleet,
                                               data.grid, rc.lookback, rc.penalty);
  const DayRecord& realized = data.history[pos];

  nlohmann::ordered_json summary;
  summary["day"] = realized.date_index;
  summary["n_vehicles"] = inst.n_vehicles();
  summary["n_periods"] = inst.grid.n_periods;

  auto run = [&](Method method) {
    const std::string name = method_name(method);
    const RobustOptions opt = detail::solver_options(rc, name);
    const ScheduleSolution sol = (method == Method::robust)
                                     ? solve_robust(inst, opt)
                                     : solve_deterministic(inst, opt);
    const RealtimeOutcome outcome = simulate_realtime(sol, realized, inst, opt.lp);
    detail::write_schedule_csv(
        detail::joined(rc.out_dir, "schedule_" + name + ".csv"), sol);
    const DayMetrics m = detail::schedule_metrics(inst, sol, outcome.d_rt_kwh);
    summary[name] = {{"objective_eur", sol.objective_eur},
                     {"c_da_eur", m.c_da_eur},
                     {"p_da_kw", m.p_da_kw},
                     {"d_rt_kwh", m.d_rt_kwh}};
    std::cout << name << ": objective " << sol.objective_eur << " EUR, C_DA "
              << m.c_da_eur << " EUR, P_DA " << m.p_da_kw << " kW, D_RT "
              << m.d_rt_kwh << " kWh\n";
  };
  if (detail::want_deterministic(rc)) run(Method::deterministic);
  if (detail::want_robust(rc)) run(Method::robust);

  std::ofstream js(detail::joined(rc.out_dir, "solve_summary.json"));
  if (!js) throw DataError("cannot write solve_summary.json");
  js << summary.dump(2) << "\n";
  return 0;
}

/// month: rolling-horizon backtest with Table-II style aggregates and the
/// per-day series (purchased power, deviations) as plot-ready CSV.
inline int cmd_month(const RunConfig& rc) {
  detail::check_method(rc);
  if (rc.days < 1) throw ValidationError("day filter selects no days");
  detail::require_out_dir(rc.out_dir);
  detail::LoadedData data = detail::load_data(rc);

  MonthConfig mc;
  mc.fleet = data.fleet;
  mc.grid = data.grid;
  mc.n_eval_days = rc.days;
  mc.lookback = rc.lookback;
  mc.penalty_eur_per_kwh = rc.penalty;
  mc.run_robust = detail::want_robust(rc);
  mc.run_deterministic = detail::want_deterministic(rc);
  mc.solver = detail::solver_options(rc, "month");

  const MonthReport report = evaluate_month(data.history, mc);

  std::ofstream ms(detail::joined(rc.out_dir, "metrics.csv"));
  if (!ms) throw DataError("cannot write metrics.csv");
  ms << "day,method,c_da_eur,p_da_kw,d_rt_kwh\n";
  for (size_t i = 0; i < report.day_indices.size(); ++i) {
    auto row = [&](const char* name, const DayMetrics& m) {
      ms << report.day_indices[i] << ',' << name << ',' << detail::csv_double(m.c_da_eur)
         << ',' << detail::csv_double(m.p_da_kw) << ',' << detail::csv_double(m.d_rt_kwh) << "\n";
    };
    if (mc.run_deterministic) row("deterministic", report.deterministic_days[i]);
    if (mc.run_robust) row("robust", report.robust_days[i]);
  }
  ms.flush();
  if (!ms) throw DataError("write failure on metrics.csv");

  nlohmann::ordered_json js;
  js["evaluated_days"] = report.day_indices;
  auto emit = [&](const char* name, const std::vector<DayMetrics>& days,
                  const MethodAggregate& agg) {
    nlohmann::ordered_json j;
    j["c_da_total_eur"] = agg.c_da_total_eur;
    j["d_rt_max_kwh"] = agg.d_rt_max_kwh;
    j["d_rt_mean_kwh"] = agg.d_rt_mean_kwh;
    j["d_rt_min_kwh"] = agg.d_rt_min_kwh;
    j["d_rt_total_kwh"] = agg.d_rt_total_kwh;
    std::vector<double> purchased, deviations;
    for (const DayMetrics& m : days) {
      purchased.push_back(m.p_da_kw);
      deviations.push_back(m.d_rt_kwh);
    }
    j["p_da_kw_per_day"] = purchased;
    j["d_rt_kwh_per_day"] = deviations;
    js[name] = std::move(j);
  };
  if (mc.run_deterministic)
    emit("deterministic", report.deterministic_days, report.deterministic_total);
  if (mc.run_robust) emit("robust", report.robust_days, report.robust_total);

  std::ofstream rs(detail::joined(rc.out_dir, "report.json"));
  if (!rs) throw DataError("cannot write report.json");
  rs << js.dump(2) << "\n";

  auto line = [&](const char* name, const MethodAggregate& agg) {
    std::cout << name << ": C_DA total " << agg.c_da_total_eur << " EUR, D_RT total "
              << agg.d_rt_total_kwh << " kWh (max " << agg.d_rt_max_kwh << ", mean "
              << agg.d_rt_mean_kwh << ", min " << agg.d_rt_min_kwh << ")\n";
  };
  if (mc.run_deterministic) line("deterministic", report.deterministic_total);
  if (mc.run_robust) line("robust", report.robust_total);
  return 0;
}

/// verify: seeded self-check suites; exit code 0 iff everything passed.
/// The report (stdout and verify.json) counts per-suite passes and failures.
inline int cmd_verify(const RunConfig& rc) {
  detail::require_out_dir(rc.out_dir);
  struct Suite {
    int pass = 0;
    int fail = 0;
  };
  Suite oracle_eq, integrality, strong_duality, ccg_vs_milp;
  Rng rng(rc.seed);

  // Oracle vs LP relaxation, with the integrality of the relaxed vertex.
  for (int trial = 0; trial < rc.verify_oracle_trials; ++trial) {
    const int T = 4 + static_cast<int>(rng.next_u64() % 93);  // 4..96
    RobustInstance inst = random_instance(rng, 1, T);
    std::vector<double> c(T, 0.0);
    for (double& v : c)
      if (rng.uniform() >= 0.3) v = rng.uniform(0.0, inst.fleet[0].max_charge_kw);
    const WorstCaseResult greedy =
        worst_case_oracle(c, inst.fleet[0], inst.grid, inst.uncertainty[0]);
    const WorstCaseResult lp =
        worst_case_lp(c, inst.fleet[0], inst.grid, inst.uncertainty[0]);
    bool integral = true;
    for (double a : lp.alpha_relaxed)
      if (std::abs(a - std::round(a)) > 1e-9) integral = false;
    (integral ? integrality.pass : integrality.fail)++;
    const bool equal = std::abs(lp.energy_kwh - greedy.energy_kwh) <=
                       1e-9 * (1.0 + std::abs(greedy.energy_kwh));
    (equal ? oracle_eq.pass : oracle_eq.fail)++;
  }

  // Robust solves: strong duality, exact products, demand, fixed point; and
  // the CCG cross-method equality.
  for (int trial = 0; trial < rc.verify_solve_trials; ++trial) {
    const int V = 1 + static_cast<int>(rng.next_u64() % 2);
    const int T = 4 + static_cast<int>(rng.next_u64() % 7);  // 4..10
    RobustInstance inst = random_instance(rng, V, T);
    RobustOptions opt;
    opt.bigm_scale = rc.bigm_scale;
    bool duality_ok = true, ccg_ok = true;
    try {
      const ScheduleSolution milp = solve_robust(inst, opt);
      for (int v = 0; v < V && duality_ok; ++v) {
        const double rate = inst.grid.dt_hours * inst.fleet[v].efficiency;
        const UncertaintySet& u = inst.uncertainty[v];
        double delivered = 0.0, dual_obj = u.k_min * milp.dual_k[v];
        for (int t = 0; t < T; ++t) {
          delivered += rate * milp.linear_charge_kw[v][t];
          dual_obj += u.alpha_lo[t] * milp.dual_lo[v][t] + u.alpha_hi[t] * milp.dual_hi[v][t];
          if (std::abs(milp.linear_charge_kw[v][t] -
                       milp.charge_kw[v][t] * milp.wc_alpha[v][t]) > 1e-9)
            duality_ok = false;
        }
        if (std::abs(dual_obj - delivered) > 1e-6) duality_ok = false;
        const double xi_total = std::accumulate(inst.forecasts[v].xi_hat_kwh.begin(),
                                                inst.forecasts[v].xi_hat_kwh.end(), 0.0);
        if (delivered < xi_total - 1e-6) duality_ok = false;
        const WorstCaseResult wc =
            worst_case_oracle(milp.charge_kw[v], inst.fleet[v], inst.grid, u);
        if (std::abs(wc.energy_kwh - milp.wc_energy_kwh[v]) > 1e-6) duality_ok = false;
      }
      const ScheduleSolution ccg = solve_robust_ccg(inst, RobustOptions{});
      if (std::abs(ccg.objective_eur - milp.objective_eur) >
          1e-6 * (1.0 + std::abs(milp.objective_eur)))
        ccg_ok = false;
    } catch (const Error&) {
      duality_ok = false;
      ccg_ok = false;
    }
    (duality_ok ? strong_duality.pass : strong_duality.fail)++;
    (ccg_ok ? ccg_vs_milp.pass : ccg_vs_milp.fail)++;
  }

  nlohmann::ordered_json js;
  js["seed"] = rc.seed;
  js["bigm_scale"] = rc.bigm_scale;
  bool all_passed = true;
  auto emit = [&](const char* name, const Suite& s) {
    js["suites"][name] = {{"pass", s.pass}, {"fail", s.fail}};
    std::cout << name << ": " << s.pass << " passed, " << s.fail << " failed\n";
    if (s.fail > 0) all_passed = false;
  };
  emit("oracle_equivalence", oracle_eq);
  emit("integrality", integrality);
  emit("strong_duality", strong_duality);
  emit("ccg_vs_milp", ccg_vs_milp);
  js["all_passed"] = all_passed;

  std::ofstream vs(detail::joined(rc.out_dir, "verify.json"));
  if (!vs) throw DataError("cannot write verify.json");
  vs << js.dump(2) << "\n";
  return all_passed ? 0 : 1;
}

}  // namespace evagg
