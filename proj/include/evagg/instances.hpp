#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "evagg/robust.hpp"
#include "evagg/rng.hpp"

namespace evagg {

/// Seeded random instance family shared by the verify command and the test
/// suites. Realistic proportions: the reference vehicle, a 41 kWh usable
/// band against a few-kWh day, mixed pinned/free availability periods.
inline RobustInstance random_instance(Rng& rng, int n_vehicles, int n_periods) {
  RobustInstance inst;
  inst.grid = {n_periods, 0.25};
  inst.penalty_eur_per_kwh = 1000.0;
  inst.prices.eur_per_kwh.resize(n_periods);
  for (double& l : inst.prices.eur_per_kwh) l = 0.03 + 0.09 * rng.uniform();

  for (int v = 0; v < n_vehicles; ++v) {
    EvParams ev;
    ev.e_init_kwh = rng.uniform(22.0, 40.0);
    inst.fleet.push_back(ev);

    UncertaintySet u;
    u.alpha_lo.resize(n_periods);
    u.alpha_hi.resize(n_periods);
    for (int t = 0; t < n_periods; ++t) {
      const double r = rng.uniform();
      if (r < 0.15) {
        u.alpha_lo[t] = 0;
        u.alpha_hi[t] = 0;
      } else if (r < 0.45) {
        u.alpha_lo[t] = 1;
        u.alpha_hi[t] = 1;
      } else {
        u.alpha_lo[t] = 0;
        u.alpha_hi[t] = 1;
      }
    }
    const int sum_lo = std::accumulate(u.alpha_lo.begin(), u.alpha_lo.end(), 0);
    const int sum_hi = std::accumulate(u.alpha_hi.begin(), u.alpha_hi.end(), 0);
    u.k_min = rng.uniform_int(0, sum_hi);
    inst.uncertainty.push_back(u);

    const double rate = inst.grid.dt_hours * ev.efficiency;
    const double deliverable = rate * ev.max_charge_kw * std::max({u.k_min, sum_lo, 0});
    const double demand_cap = std::min(0.8 * deliverable, 15.0);
    const double total_xi = (demand_cap > 0.0) ? rng.uniform(0.2, 1.0) * demand_cap : 0.0;

    ForecastInputs fc;
    fc.alpha_hat.resize(n_periods);
    fc.xi_hat_kwh.assign(n_periods, 0.0);
    for (int t = 0; t < n_periods; ++t)
      fc.alpha_hat[t] = 0.5 * (u.alpha_lo[t] + u.alpha_hi[t]);
    std::vector<double> w(n_periods);
    double wsum = 0.0;
    for (int t = 0; t < n_periods; ++t) {
      w[t] = rng.uniform();
      wsum += w[t];
    }
    if (total_xi > 0.0)
      for (int t = 0; t < n_periods; ++t) fc.xi_hat_kwh[t] = total_xi * w[t] / wsum;
    inst.forecasts.push_back(fc);
  }
  return inst;
}

/// Random charging plan with idle periods, for worst-case oracle checks.
inline std::vector<double> random_charge_plan(Rng& rng, int n_periods,
                                              double max_kw = 7.4) {
  std::vector<double> c(n_periods, 0.0);
  for (double& v : c)
    if (rng.uniform() >= 0.3) v = rng.uniform(0.0, max_kw);
  return c;
}

}  // namespace evagg
