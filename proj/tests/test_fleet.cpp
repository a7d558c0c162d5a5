#include <catch2/catch_amalgamated.hpp>

#include "evagg/fleet.hpp"

using namespace evagg;

TEST_CASE("consistent fleet passes validation") {
  EvParams ev;  // 7.4 kW, 0.95, [10, 51] kWh: the reference vehicle
  TimeGrid grid{4, 0.25};
  UncertaintySet u;
  u.alpha_lo = {0, 1, 0, 0};
  u.alpha_hi = {1, 1, 1, 0};
  u.k_min = 2;
  const ValidationReport rep = validate_fleet({ev}, grid, {u});
  INFO(rep.to_string());
  CHECK(rep.ok());
}

TEST_CASE("empty uncertainty set is reported") {
  EvParams ev;
  TimeGrid grid{4, 0.25};
  UncertaintySet u;
  u.alpha_lo.assign(4, 0);
  u.alpha_hi.assign(4, 0);
  u.k_min = 1;
  const ValidationReport rep = validate_fleet({ev}, grid, {u});
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.violations[0].message == "empty uncertainty set");
  CHECK(rep.violations[0].vehicle == 0);
}

TEST_CASE("initial SOC below the minimum is reported") {
  EvParams ev;
  ev.e_init_kwh = 5.0;  // below e_min = 10
  TimeGrid grid{4, 0.25};
  UncertaintySet u;
  u.alpha_lo.assign(4, 0);
  u.alpha_hi.assign(4, 1);
  u.k_min = 0;
  const ValidationReport rep = validate_fleet({ev}, grid, {u});
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.violations[0].message == "initial SOC below minimum");
}

TEST_CASE("crossed availability bounds and bad K are reported") {
  EvParams ev;
  TimeGrid grid{3, 0.25};
  UncertaintySet u;
  u.alpha_lo = {1, 0, 0};
  u.alpha_hi = {0, 1, 1};
  u.k_min = -1;
  const ValidationReport rep = validate_fleet({ev}, grid, {u});
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.to_string().find("alpha_lo above alpha_hi") != std::string::npos);
  CHECK(rep.to_string().find("negative availability floor") != std::string::npos);
}

TEST_CASE("day record motion implies unavailability") {
  TimeGrid grid{3, 0.25};
  DayRecord rec;
  rec.weekday = 2;
  rec.realized_alpha = {{1, 0, 1}};
  rec.realized_xi_kwh = {{0.0, 1.5, 0.0}};
  rec.prices.eur_per_kwh = {0.1, 0.1, 0.1};
  CHECK(validate_day_record(rec, 1, grid).ok());

  rec.realized_alpha[0][1] = 1;  // moving while marked available
  const ValidationReport rep = validate_day_record(rec, 1, grid);
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.to_string().find("available while moving") != std::string::npos);
}

TEST_CASE("mismatched list lengths are caught") {
  EvParams ev;
  TimeGrid grid{4, 0.25};
  const ValidationReport rep = validate_fleet({ev, ev}, grid, {});
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.to_string().find("differ in length") != std::string::npos);
}
