#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "evagg/deterministic.hpp"
#include "evagg/robust.hpp"
#include "evagg/rng.hpp"
#include "robust_util.hpp"

using namespace evagg;

namespace {

TimeGrid quarter_grid(int T) { return TimeGrid{T, 0.25}; }

UncertaintySet free_box(int T, int k) {
  UncertaintySet u;
  u.alpha_lo.assign(T, 0);
  u.alpha_hi.assign(T, 1);
  u.k_min = k;
  return u;
}

double dual_objective(const UncertaintySet& u, const WorstCaseResult& wc) {
  double obj = u.k_min * wc.dual_k;
  for (size_t t = 0; t < u.alpha_lo.size(); ++t)
    obj += u.alpha_lo[t] * wc.dual_lo[t] + u.alpha_hi[t] * wc.dual_hi[t];
  return obj;
}

void check_dual_feasible(const std::vector<double>& c, const EvParams& ev,
                         const TimeGrid& grid, const WorstCaseResult& wc) {
  const double rate = grid.dt_hours * ev.efficiency;
  for (size_t t = 0; t < c.size(); ++t) {
    CHECK(wc.dual_lo[t] >= -1e-9);
    CHECK(wc.dual_hi[t] <= 1e-9);
    CHECK(wc.dual_k + wc.dual_lo[t] + wc.dual_hi[t] <= rate * c[t] + 1e-9);
  }
  CHECK(wc.dual_k >= -1e-9);
}

}  // namespace

TEST_CASE("oracle picks the smallest contributions, ties to the lowest period") {
  EvParams ev;
  ev.efficiency = 1.0;
  const TimeGrid grid = quarter_grid(4);
  const std::vector<double> c{4.0, 0.0, 8.0, 4.0};
  const UncertaintySet u = free_box(4, 2);

  WorstCaseResult wc = worst_case_oracle(c, ev, grid, u);
  CHECK(wc.alpha == std::vector<int>{1, 1, 0, 0});
  CHECK(wc.energy_kwh == Catch::Approx(1.0).margin(1e-12));
  CHECK(dual_objective(u, wc) == Catch::Approx(wc.energy_kwh).margin(1e-9));
  check_dual_feasible(c, ev, grid, wc);
}

TEST_CASE("oracle with no forced availability and K=0 stays at the floor") {
  EvParams ev;
  ev.efficiency = 1.0;
  const TimeGrid grid = quarter_grid(4);
  WorstCaseResult wc = worst_case_oracle({4.0, 0.0, 8.0, 4.0}, ev, grid, free_box(4, 0));
  CHECK(wc.alpha == std::vector<int>{0, 0, 0, 0});
  CHECK(wc.energy_kwh == 0.0);
  CHECK(wc.dual_k == 0.0);
}

TEST_CASE("fully fixed availability delivers everything") {
  EvParams ev;
  ev.efficiency = 1.0;
  const TimeGrid grid = quarter_grid(4);
  UncertaintySet u;
  u.alpha_lo.assign(4, 1);
  u.alpha_hi.assign(4, 1);
  u.k_min = 0;
  WorstCaseResult wc = worst_case_oracle({4.0, 0.0, 8.0, 4.0}, ev, grid, u);
  CHECK(wc.alpha == std::vector<int>{1, 1, 1, 1});
  CHECK(wc.energy_kwh == Catch::Approx(4.0).margin(1e-12));
  CHECK(dual_objective(u, wc) == Catch::Approx(4.0).margin(1e-9));
  check_dual_feasible({4.0, 0.0, 8.0, 4.0}, ev, grid, wc);
}

TEST_CASE("empty uncertainty set is rejected") {
  EvParams ev;
  UncertaintySet u;
  u.alpha_lo.assign(4, 0);
  u.alpha_hi.assign(4, 0);
  u.k_min = 1;
  CHECK_THROWS_AS(worst_case_oracle({1, 1, 1, 1}, ev, quarter_grid(4), u), ValidationError);
}

TEST_CASE("LP relaxation of the worst case is integral and matches the oracle") {
  EvParams ev;
  ev.efficiency = 1.0;
  const TimeGrid grid = quarter_grid(4);
  const std::vector<double> c{4.0, 0.0, 8.0, 4.0};
  const UncertaintySet u = free_box(4, 2);
  WorstCaseResult lp = worst_case_lp(c, ev, grid, u);
  CHECK(lp.energy_kwh == Catch::Approx(1.0).margin(1e-9));
  for (double a : lp.alpha_relaxed)
    CHECK(std::abs(a - std::round(a)) <= 1e-9);

  // K = T with a full box forces the all-ones point.
  WorstCaseResult all = worst_case_lp(c, ev, grid, free_box(4, 4));
  CHECK(all.alpha == std::vector<int>{1, 1, 1, 1});
}

TEST_CASE("oracle and LP agree on seeded instances (total unimodularity)") {
  Rng rng(424242);
  for (int trial = 0; trial < 200; ++trial) {
    const int T = rng.uniform_int(4, 24);
    RobustInstance inst = testutil::random_robust_instance(rng, 1, T);
    const std::vector<double> c = testutil::random_charge(rng, T);
    WorstCaseResult greedy = worst_case_oracle(c, inst.fleet[0], inst.grid, inst.uncertainty[0]);
    WorstCaseResult lp = worst_case_lp(c, inst.fleet[0], inst.grid, inst.uncertainty[0]);
    for (double a : lp.alpha_relaxed)
      REQUIRE(std::abs(a - std::round(a)) <= 1e-9);
    REQUIRE(std::abs(lp.energy_kwh - greedy.energy_kwh) <=
            1e-9 * (1.0 + std::abs(greedy.energy_kwh)));
    // Both dual certificates price the same optimum.
    CHECK(dual_objective(inst.uncertainty[0], greedy) ==
          Catch::Approx(greedy.energy_kwh).margin(1e-6));
    CHECK(dual_objective(inst.uncertainty[0], lp) ==
          Catch::Approx(lp.energy_kwh).margin(1e-6));
    check_dual_feasible(c, inst.fleet[0], inst.grid, greedy);
  }
}

TEST_CASE("single-level program has the documented shape") {
  Rng rng(7);
  RobustInstance inst = testutil::random_robust_instance(rng, 1, 6);
  MilpProblem p = build_single_level(inst, 0);
  const int T = 6;
  CHECK(p.lp.n_vars() == 8 * T + 1);   // c,e,s+,s-,z,alpha,beta_lo,beta_hi each T, plus zeta
  CHECK(p.lp.n_rows() == 5 * T + 3);   // balance, dual, 3 big-M families, card, sd, demand
  CHECK(p.binary_vars.size() == static_cast<size_t>(T));
}

TEST_CASE("nothing to buy when prices, demand and K are all zero") {
  RobustInstance inst;
  inst.grid = quarter_grid(4);
  inst.prices.eur_per_kwh.assign(4, 0.0);
  inst.fleet.push_back(EvParams{});
  inst.uncertainty.push_back(free_box(4, 0));
  ForecastInputs fc;
  fc.alpha_hat.assign(4, 1.0);
  fc.xi_hat_kwh.assign(4, 0.0);
  inst.forecasts.push_back(fc);
  ScheduleSolution sol = solve_robust(inst);
  CHECK(sol.objective_eur == Catch::Approx(0.0).margin(1e-9));
  for (double c : sol.charge_kw[0]) CHECK(c == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("fixed cheap window receives the charge (EV-A pattern)") {
  RobustInstance inst;
  inst.grid = quarter_grid(6);
  inst.prices.eur_per_kwh = {0.10, 0.02, 0.10, 0.10, 0.10, 0.10};
  EvParams ev;
  ev.e_init_kwh = 30.0;
  inst.fleet.push_back(ev);
  UncertaintySet u = free_box(6, 3);
  u.alpha_lo[1] = 1;  // availability certain in the cheap period
  inst.uncertainty.push_back(u);
  ForecastInputs fc;
  fc.alpha_hat.assign(6, 1.0);
  fc.xi_hat_kwh.assign(6, 0.0);
  fc.xi_hat_kwh[4] = 1.5;
  inst.forecasts.push_back(fc);

  ScheduleSolution sol = solve_robust(inst);
  const double rate = inst.grid.dt_hours * ev.efficiency;
  CHECK(sol.charge_kw[0][1] == Catch::Approx(1.5 / rate).margin(1e-6));
  for (int t : {0, 2, 3, 4, 5})
    CHECK(sol.charge_kw[0][t] == Catch::Approx(0.0).margin(1e-6));
}

TEST_CASE("no fixed periods forces a worst-case-feasible spread (EV-B pattern)") {
  RobustInstance inst;
  inst.grid = quarter_grid(6);
  inst.prices.eur_per_kwh = {0.05, 0.04, 0.06, 0.05, 0.07, 0.05};
  EvParams ev;
  inst.fleet.push_back(ev);
  inst.uncertainty.push_back(free_box(6, 4));
  ForecastInputs fc;
  fc.alpha_hat.assign(6, 0.7);
  fc.xi_hat_kwh.assign(6, 0.0);
  fc.xi_hat_kwh[3] = 3.0;
  inst.forecasts.push_back(fc);

  ScheduleSolution sol = solve_robust(inst);
  WorstCaseResult wc = worst_case_oracle(sol.charge_kw[0], ev, inst.grid, inst.uncertainty[0]);
  const double xi_total = 3.0;
  CHECK(wc.energy_kwh >= xi_total - 1e-6);  // K cheapest periods alone cover the demand
}

TEST_CASE("robust optimum satisfies the reformulation invariants") {
  Rng rng(1001);
  for (int trial = 0; trial < 8; ++trial) {
    const int T = rng.uniform_int(4, 10);
    RobustInstance inst = testutil::random_robust_instance(rng, 2, T);
    ScheduleSolution sol = solve_robust(inst);
    const ValidationReport rep = validate_solution(sol, inst.fleet, inst.grid);
    INFO(rep.to_string());
    CHECK(rep.ok());
    for (int v = 0; v < inst.n_vehicles(); ++v) {
      const double rate = inst.grid.dt_hours * inst.fleet[v].efficiency;
      const UncertaintySet& u = inst.uncertainty[v];
      double delivered = 0.0, dual_obj = u.k_min * sol.dual_k[v];
      for (int t = 0; t < T; ++t) {
        delivered += rate * sol.linear_charge_kw[v][t];
        dual_obj += u.alpha_lo[t] * sol.dual_lo[v][t] + u.alpha_hi[t] * sol.dual_hi[v][t];
        // Linearization exactness at the integral point.
        CHECK(std::abs(sol.linear_charge_kw[v][t] -
                       sol.charge_kw[v][t] * sol.wc_alpha[v][t]) <= 1e-9);
      }
      CHECK(std::abs(dual_obj - delivered) <= 1e-6);  // strong duality, z-form
      const double xi_total = std::accumulate(inst.forecasts[v].xi_hat_kwh.begin(),
                                              inst.forecasts[v].xi_hat_kwh.end(), 0.0);
      CHECK(delivered >= xi_total - 1e-6);  // robust demand
      // Fixed point: the oracle reproduces the delivered worst-case energy.
      WorstCaseResult wc =
          worst_case_oracle(sol.charge_kw[v], inst.fleet[v], inst.grid, u);
      CHECK(std::abs(wc.energy_kwh - sol.wc_energy_kwh[v]) <= 1e-6);
    }
  }
}

TEST_CASE("solve_robust equals the exhaustive bilevel oracle on small instances") {
  Rng rng(65537);
  for (int trial = 0; trial < 12; ++trial) {
    const int T = rng.uniform_int(4, 6);
    RobustInstance inst = testutil::random_robust_instance(rng, 1, T);
    const double oracle = testutil::brute_force_bilevel(inst);
    REQUIRE(std::isfinite(oracle));
    ScheduleSolution sol = solve_robust(inst);
    CHECK(sol.objective_eur == Catch::Approx(oracle).margin(1e-6));
  }
}

TEST_CASE("CCG matches the MILP route") {
  Rng rng(90210);
  for (int trial = 0; trial < 10; ++trial) {
    const int T = rng.uniform_int(4, 12);
    RobustInstance inst = testutil::random_robust_instance(rng, 2, T);
    ScheduleSolution milp = solve_robust(inst);
    ScheduleSolution ccg = solve_robust_ccg(inst, 1e-7);
    CHECK(ccg.objective_eur == Catch::Approx(milp.objective_eur).margin(1e-6));
    const ValidationReport rep = validate_solution(ccg, inst.fleet, inst.grid);
    INFO(rep.to_string());
    CHECK(rep.ok());
  }
}

TEST_CASE("CCG terminates immediately on a fully fixed set") {
  RobustInstance inst;
  inst.grid = quarter_grid(5);
  inst.prices.eur_per_kwh = {0.05, 0.03, 0.06, 0.04, 0.05};
  EvParams ev;
  inst.fleet.push_back(ev);
  UncertaintySet u;
  u.alpha_lo.assign(5, 1);
  u.alpha_hi.assign(5, 1);
  u.k_min = 5;
  inst.uncertainty.push_back(u);
  ForecastInputs fc;
  fc.alpha_hat.assign(5, 1.0);
  fc.xi_hat_kwh.assign(5, 0.6);
  inst.forecasts.push_back(fc);

  ScheduleSolution ccg = solve_robust_ccg(inst, 1e-7);
  ScheduleSolution det = solve_deterministic(inst);
  CHECK(ccg.objective_eur == Catch::Approx(det.objective_eur).margin(1e-6));
}

TEST_CASE("degenerate collapse: all-ones box with K=T equals the deterministic model") {
  Rng rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    const int T = rng.uniform_int(4, 8);
    RobustInstance inst = testutil::random_robust_instance(rng, 1, T);
    for (int t = 0; t < T; ++t) {
      inst.uncertainty[0].alpha_lo[t] = 1;
      inst.uncertainty[0].alpha_hi[t] = 1;
      inst.forecasts[0].alpha_hat[t] = 1.0;
    }
    inst.uncertainty[0].k_min = T;
    ScheduleSolution robust = solve_robust(inst);
    ScheduleSolution det = solve_deterministic(inst);
    CHECK(robust.objective_eur == Catch::Approx(det.objective_eur).margin(1e-6));
  }
}

TEST_CASE("raising K weakly decreases the robust objective") {
  Rng rng(313);
  RobustInstance inst = testutil::random_robust_instance(rng, 1, 8);
  const int sum_hi = std::accumulate(inst.uncertainty[0].alpha_hi.begin(),
                                     inst.uncertainty[0].alpha_hi.end(), 0);
  double previous = kInf;
  for (int k = 0; k <= sum_hi; k += 2) {
    inst.uncertainty[0].k_min = k;
    double objective;
    try {
      objective = solve_robust(inst).objective_eur;
    } catch (const SolverError&) {
      continue;  // demand unsatisfiable at very small K
    }
    CHECK(objective <= previous + 1e-6);
    previous = objective;
  }
}

TEST_CASE("unsatisfiable robust demand reports the vehicle") {
  RobustInstance inst;
  inst.grid = quarter_grid(4);
  inst.prices.eur_per_kwh.assign(4, 0.05);
  inst.fleet.push_back(EvParams{});
  inst.uncertainty.push_back(free_box(4, 1));
  ForecastInputs fc;
  fc.alpha_hat.assign(4, 1.0);
  fc.xi_hat_kwh.assign(4, 20.0);  // 80 kWh a day: beyond any worst-case delivery
  inst.forecasts.push_back(fc);
  try {
    solve_robust(inst);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("vehicle 0") != std::string::npos);
  }
  try {
    solve_robust_ccg(inst, 1e-7);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("vehicle 0") != std::string::npos);
  }
}
