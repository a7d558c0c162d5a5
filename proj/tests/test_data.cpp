#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "evagg/data.hpp"

using namespace evagg;

namespace {

GeneratorConfig small_config() {
  GeneratorConfig cfg;
  cfg.seed = 42;
  cfg.n_vehicles = 3;
  cfg.n_days = 30;
  cfg.n_periods = 24;
  cfg.dt_hours = 1.0;
  cfg.depart_mean_period = 8;
  cfg.depart_spread_periods = 2;
  cfg.arrive_mean_period = 18;
  cfg.arrive_spread_periods = 2;
  return cfg;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("evagg_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int counter() {
    static int n = 0;
    return n++;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("generator honors the motion-implies-unavailable rule") {
  GeneratorConfig cfg = small_config();
  const auto history = generate_history(cfg, cfg.fleet());
  REQUIRE(history.size() == 30);
  for (const DayRecord& rec : history) {
    const ValidationReport rep = validate_day_record(rec, cfg.n_vehicles, cfg.grid());
    INFO(rep.to_string());
    REQUIRE(rep.ok());
  }
}

TEST_CASE("a no-trip day is fully available with zero consumption") {
  GeneratorConfig cfg = small_config();
  cfg.no_trip_prob = 1.0;
  const auto history = generate_history(cfg, cfg.fleet());
  for (int t = 0; t < cfg.n_periods; ++t) {
    CHECK(history[0].realized_alpha[0][t] == 1);
    CHECK(history[0].realized_xi_kwh[0][t] == 0.0);
  }
}

TEST_CASE("trip consumption equals distance times the energy rating") {
  // 0.137 kWh/km: a 30 km day consumes 4.11 kWh.
  GeneratorConfig cfg = small_config();
  cfg.no_trip_prob = 0.0;
  cfg.distance_log_mean_km = std::log(30.0);
  cfg.distance_log_sd = 0.0;
  const auto history = generate_history(cfg, cfg.fleet());
  const double total = std::accumulate(history[0].realized_xi_kwh[0].begin(),
                                       history[0].realized_xi_kwh[0].end(), 0.0);
  CHECK(total == Catch::Approx(30.0 * 0.137).margin(1e-9));
}

TEST_CASE("same seed reproduces the records exactly") {
  GeneratorConfig cfg = small_config();
  const auto a = generate_history(cfg, cfg.fleet());
  const auto b = generate_history(cfg, cfg.fleet());
  REQUIRE(a.size() == b.size());
  for (size_t d = 0; d < a.size(); ++d) {
    CHECK(a[d].realized_alpha == b[d].realized_alpha);
    CHECK(a[d].realized_xi_kwh == b[d].realized_xi_kwh);
    CHECK(a[d].prices.eur_per_kwh == b[d].prices.eur_per_kwh);
  }
}

TEST_CASE("csv round trip is lossless") {
  TempDir dir;
  GeneratorConfig cfg = small_config();
  const auto history = generate_history(cfg, cfg.fleet());
  save_history_csv(history, dir.file("history.csv"), dir.file("prices.csv"));
  const auto loaded = load_history_csv(dir.file("history.csv"), dir.file("prices.csv"));
  REQUIRE(loaded.size() == history.size());
  for (size_t d = 0; d < history.size(); ++d) {
    CHECK(loaded[d].date_index == history[d].date_index);
    CHECK(loaded[d].weekday == history[d].weekday);
    CHECK(loaded[d].realized_alpha == history[d].realized_alpha);
    CHECK(loaded[d].realized_xi_kwh == history[d].realized_xi_kwh);
    CHECK(loaded[d].prices.eur_per_kwh == history[d].prices.eur_per_kwh);
  }
}

TEST_CASE("moving-while-available rows are rejected with their line number") {
  TempDir dir;
  {
    std::ofstream h(dir.file("history.csv"));
    h << kHistoryHeader << "\n";
    h << "0,0,0,1,1,0\n";
    h << "0,0,0,2,1,2.5\n";  // alpha=1 with xi>0
    std::ofstream p(dir.file("prices.csv"));
    p << kPricesHeader << "\n0,1,0.05\n0,2,0.05\n";
  }
  try {
    load_history_csv(dir.file("history.csv"), dir.file("prices.csv"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("available while moving") != std::string::npos);
  }
}

TEST_CASE("header mismatch is a schema error") {
  TempDir dir;
  {
    std::ofstream h(dir.file("history.csv"));
    h << "day,vehicle,period,alpha,xi\n";
    std::ofstream p(dir.file("prices.csv"));
    p << kPricesHeader << "\n";
  }
  try {
    load_history_csv(dir.file("history.csv"), dir.file("prices.csv"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("header mismatch") != std::string::npos);
  }
}

TEST_CASE("incomplete coverage is a dimension error") {
  TempDir dir;
  {
    std::ofstream h(dir.file("history.csv"));
    h << kHistoryHeader << "\n";
    h << "0,0,0,1,1,0\n";
    h << "0,0,1,1,1,0\n";
    h << "0,0,1,2,1,0\n";  // vehicle 0 lacks period 2
    std::ofstream p(dir.file("prices.csv"));
    p << kPricesHeader << "\n0,1,0.05\n0,2,0.05\n";
  }
  try {
    load_history_csv(dir.file("history.csv"), dir.file("prices.csv"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("dimension mismatch") != std::string::npos);
  }
}

TEST_CASE("forecast averages the last four same-weekday days") {
  // Hand-built 2-vehicle history over 29 days; availability sample [1,1,0,1]
  // at a chosen period yields alpha_hat 0.75.
  const int T = 4;
  std::vector<DayRecord> history;
  for (int d = 0; d < 29; ++d) {
    DayRecord rec;
    rec.date_index = d;
    rec.weekday = d % 7;
    rec.realized_alpha.assign(2, std::vector<int>(T, 1));
    rec.realized_xi_kwh.assign(2, std::vector<double>(T, 0.0));
    rec.prices.eur_per_kwh.assign(T, 0.01 * d);
    history.push_back(rec);
  }
  // Mondays (weekday 0) at positions 0,7,14,21,28; the last four are
  // 7,14,21,28. Make vehicle 0 unavailable at period 2 on day 21 only.
  history[21].realized_alpha[0][1] = 0;
  history[21].realized_xi_kwh[0][1] = 2.0;
  ForecastResult fc = forecast(history, 0, 4);
  CHECK(fc.per_vehicle[0].alpha_hat[1] == Catch::Approx(0.75));
  CHECK(fc.per_vehicle[0].xi_hat_kwh[1] == Catch::Approx(0.5));
  CHECK(fc.per_vehicle[1].alpha_hat[1] == Catch::Approx(1.0));
  // Prices: mean over the last four calendar days 25..28.
  CHECK(fc.prices.eur_per_kwh[0] == Catch::Approx(0.01 * (25 + 26 + 27 + 28) / 4.0));

  // Identical days: the mean is idempotent.
  std::vector<DayRecord> flat(history.begin(), history.begin() + 28);
  for (DayRecord& rec : flat) {
    rec.weekday = 3;
    rec.realized_alpha = history[0].realized_alpha;
    rec.realized_xi_kwh = history[0].realized_xi_kwh;
  }
  ForecastResult idem = forecast(flat, 3, 4);
  for (int t = 0; t < T; ++t)
    CHECK(idem.per_vehicle[0].alpha_hat[t] == Catch::Approx(1.0));
}

TEST_CASE("forecast with too little history names the shortfall") {
  std::vector<DayRecord> history;
  for (int d = 0; d < 10; ++d) {
    DayRecord rec;
    rec.date_index = d;
    rec.weekday = d % 7;
    rec.realized_alpha.assign(1, std::vector<int>(4, 1));
    rec.realized_xi_kwh.assign(1, std::vector<double>(4, 0.0));
    rec.prices.eur_per_kwh.assign(4, 0.05);
    history.push_back(rec);
  }
  try {
    forecast(history, 0, 4);  // only two Mondays in ten days
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("insufficient history") != std::string::npos);
    CHECK(msg.find("need 4") != std::string::npos);
  }
}

TEST_CASE("uncertainty set construction from a history slice") {
  const int T = 5;
  std::vector<DayRecord> slice;
  // Availability counts per day: 4, 3, 5, 4 -> K = 3.
  const std::vector<std::vector<int>> alphas = {
      {1, 1, 1, 1, 0}, {1, 1, 1, 0, 0}, {1, 1, 1, 1, 1}, {1, 1, 0, 1, 1}};
  for (int d = 0; d < 4; ++d) {
    DayRecord rec;
    rec.date_index = d;
    rec.weekday = 0;
    rec.realized_alpha = {alphas[d]};
    rec.realized_xi_kwh = {std::vector<double>(T, 0.0)};
    rec.prices.eur_per_kwh.assign(T, 0.05);
    slice.push_back(rec);
  }
  UncertaintySet u = build_uncertainty_set(slice, 0);
  CHECK(u.alpha_lo == std::vector<int>{1, 1, 0, 0, 0});  // unanimous ones only
  CHECK(u.alpha_hi == std::vector<int>{1, 1, 1, 1, 1});  // any one
  CHECK(u.k_min == 3);

  // Every observed day is a feasible point of the set.
  for (const DayRecord& rec : slice) {
    int count = 0;
    for (int t = 0; t < T; ++t) {
      CHECK(rec.realized_alpha[0][t] >= u.alpha_lo[t]);
      CHECK(rec.realized_alpha[0][t] <= u.alpha_hi[t]);
      count += rec.realized_alpha[0][t];
    }
    CHECK(count >= u.k_min);
  }

  CHECK_THROWS_AS(build_uncertainty_set(std::vector<DayRecord>{}, 0), DataError);
}

TEST_CASE("availability counts {57,60,59,61} produce K=57") {
  const int T = 96;
  std::vector<DayRecord> slice;
  for (int count : {57, 60, 59, 61}) {
    DayRecord rec;
    rec.realized_alpha = {std::vector<int>(T, 0)};
    rec.realized_xi_kwh = {std::vector<double>(T, 0.0)};
    for (int t = 0; t < count; ++t) rec.realized_alpha[0][t] = 1;
    rec.prices.eur_per_kwh.assign(T, 0.05);
    slice.push_back(rec);
  }
  CHECK(build_uncertainty_set(slice, 0).k_min == 57);
}

TEST_CASE("generator config file round trip and validation") {
  TempDir dir;
  {
    std::ofstream f(dir.file("gen.cfg"));
    f << "# synthetic fleet\n";
    f << "seed = 99\n";
    f << "n_vehicles = 5\n";
    f << "n_days = 40\n";
    f << "n_periods = 48\n";
    f << "dt_hours = 0.5\n";
    f << "depart_mean_period = 15\n";
    f << "arrive_mean_period = 36\n";
    f << "no_trip_prob = 0.2\n";
  }
  GeneratorConfig cfg = GeneratorConfig::from_file(dir.file("gen.cfg"));
  CHECK(cfg.seed == 99);
  CHECK(cfg.n_vehicles == 5);
  CHECK(cfg.n_periods == 48);
  CHECK(cfg.dt_hours == 0.5);

  {
    std::ofstream f(dir.file("bad.cfg"));
    f << "mystery_knob = 3\n";
  }
  CHECK_THROWS_AS(GeneratorConfig::from_file(dir.file("bad.cfg")), DataError);

  {
    std::ofstream f(dir.file("invalid.cfg"));
    f << "no_trip_prob = 1.5\n";
  }
  CHECK_THROWS_AS(GeneratorConfig::from_file(dir.file("invalid.cfg")), DataError);
}

TEST_CASE("default e_init is the midpoint of the SOC band") {
  GeneratorConfig cfg = small_config();
  CHECK(cfg.ev_params().e_init_kwh == Catch::Approx(30.5));
  cfg.ev_e_init_kwh = 20.0;
  CHECK(cfg.ev_params().e_init_kwh == Catch::Approx(20.0));
}
