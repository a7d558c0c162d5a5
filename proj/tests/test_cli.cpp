#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evagg/cli.hpp"

using namespace evagg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int n = 0;
    path = fs::temp_directory_path() /
           ("evagg_cli_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_config(const std::string& path, int vehicles, int days, int periods) {
  std::ofstream f(path);
  f << "seed = 7\n";
  f << "n_vehicles = " << vehicles << "\n";
  f << "n_days = " << days << "\n";
  f << "n_periods = " << periods << "\n";
  f << "dt_hours = 1.0\n";
  f << "depart_mean_period = " << periods / 3 << "\n";
  f << "depart_spread_periods = 1.5\n";
  f << "arrive_mean_period = " << 2 * periods / 3 << "\n";
  f << "arrive_spread_periods = 1.5\n";
  f << "distance_log_mean_km = 2.5\n";
  f << "no_trip_prob = 0.2\n";
}

}  // namespace

TEST_CASE("generate writes the documented row counts and is reproducible") {
  TempDir dir;
  write_config(dir.file("gen.cfg"), 3, 30, 12);

  RunConfig rc;
  rc.config_path = dir.file("gen.cfg");
  rc.out_dir = dir.file("a");
  REQUIRE(cmd_generate(rc) == 0);

  // Row count: header + V*T*days.
  const std::string history = slurp(rc.out_dir + "/history.csv");
  const auto rows = std::count(history.begin(), history.end(), '\n');
  CHECK(rows == 1 + 3 * 12 * 30);

  // Consistency rule holds on every generated row (full-file scan).
  const auto records = load_history_csv(rc.out_dir + "/history.csv",
                                        rc.out_dir + "/prices.csv");
  CHECK(records.size() == 30);

  // Byte-identical rerun.
  rc.out_dir = dir.file("b");
  REQUIRE(cmd_generate(rc) == 0);
  CHECK(slurp(dir.file("a") + "/history.csv") == slurp(dir.file("b") + "/history.csv"));
  CHECK(slurp(dir.file("a") + "/prices.csv") == slurp(dir.file("b") + "/prices.csv"));
}

TEST_CASE("solve writes schedules whose CSV recomputes to the reported objective") {
  TempDir dir;
  write_config(dir.file("gen.cfg"), 2, 30, 12);
  RunConfig rc;
  rc.config_path = dir.file("gen.cfg");
  rc.out_dir = dir.str();
  REQUIRE(cmd_generate(rc) == 0);
  REQUIRE(cmd_solve(rc) == 0);

  const auto summary = nlohmann::json::parse(slurp(dir.file("solve_summary.json")));
  for (const char* method : {"robust", "deterministic"}) {
    REQUIRE(summary.contains(method));
    // Recompute the objective from the schedule CSV and the day-ahead prices.
    const auto history = load_history_csv(dir.file("history.csv"), dir.file("prices.csv"));
    const int day_pos = static_cast<int>(history.size()) - 1;
    GeneratorConfig cfg = GeneratorConfig::from_file(dir.file("gen.cfg"));
    const RobustInstance inst = instance_for_day(
        history, day_pos, std::vector<EvParams>(2, cfg.ev_params()),
        TimeGrid{12, cfg.dt_hours});

    std::ifstream cs(dir.file(std::string("schedule_") + method + ".csv"));
    REQUIRE(cs);
    std::string line;
    std::getline(cs, line);
    CHECK(line == "vehicle,period,c_kw,z_kw,e_kwh,s_plus,s_minus,alpha_wc");
    double objective = 0.0;
    while (std::getline(cs, line)) {
      const auto tok = detail::split_csv(line);
      REQUIRE(tok.size() == 8);
      const int period = std::stoi(tok[1]);
      const double c = std::stod(tok[2]);
      const double sp = std::stod(tok[5]);
      const double sn = std::stod(tok[6]);
      objective += inst.prices.eur_per_kwh[period - 1] * c * inst.grid.dt_hours +
                   inst.penalty_eur_per_kwh * (sp + sn);
    }
    CHECK(objective ==
          Catch::Approx(summary[method]["objective_eur"].get<double>()).margin(1e-6));
  }

  // Robust buys at least as much certainty as the deterministic plan.
  CHECK(summary["robust"]["c_da_eur"].get<double>() >=
        summary["deterministic"]["c_da_eur"].get<double>() - 1e-9);
}

TEST_CASE("solve and month are deterministic across repeated runs") {
  TempDir dir;
  write_config(dir.file("gen.cfg"), 2, 31, 10);
  RunConfig rc;
  rc.config_path = dir.file("gen.cfg");
  rc.out_dir = dir.str();
  REQUIRE(cmd_generate(rc) == 0);

  RunConfig ra = rc;
  ra.out_dir = dir.file("runA");
  ra.history_path = dir.file("history.csv");
  ra.prices_path = dir.file("prices.csv");
  RunConfig rb = ra;
  rb.out_dir = dir.file("runB");
  ra.days = 2;
  rb.days = 2;

  REQUIRE(cmd_month(ra) == 0);
  REQUIRE(cmd_month(rb) == 0);
  CHECK(slurp(ra.out_dir + "/metrics.csv") == slurp(rb.out_dir + "/metrics.csv"));
  CHECK(slurp(ra.out_dir + "/report.json") == slurp(rb.out_dir + "/report.json"));

  REQUIRE(cmd_solve(ra) == 0);
  REQUIRE(cmd_solve(rb) == 0);
  CHECK(slurp(ra.out_dir + "/schedule_robust.csv") ==
        slurp(rb.out_dir + "/schedule_robust.csv"));
  CHECK(slurp(ra.out_dir + "/solve_summary.json") ==
        slurp(rb.out_dir + "/solve_summary.json"));
}

TEST_CASE("month aggregates equal a fold over the per-day metrics file") {
  TempDir dir;
  write_config(dir.file("gen.cfg"), 2, 31, 10);
  RunConfig rc;
  rc.config_path = dir.file("gen.cfg");
  rc.out_dir = dir.str();
  REQUIRE(cmd_generate(rc) == 0);
  rc.days = 3;
  REQUIRE(cmd_month(rc) == 0);

  std::ifstream ms(dir.file("metrics.csv"));
  REQUIRE(ms);
  std::string line;
  std::getline(ms, line);
  CHECK(line == "day,method,c_da_eur,p_da_kw,d_rt_kwh");
  double robust_cda = 0, robust_drt = 0, det_cda = 0, det_drt = 0;
  int robust_rows = 0, det_rows = 0;
  while (std::getline(ms, line)) {
    const auto tok = detail::split_csv(line);
    REQUIRE(tok.size() == 5);
    if (tok[1] == "robust") {
      robust_cda += std::stod(tok[2]);
      robust_drt += std::stod(tok[4]);
      ++robust_rows;
    } else {
      det_cda += std::stod(tok[2]);
      det_drt += std::stod(tok[4]);
      ++det_rows;
    }
  }
  CHECK(robust_rows == 3);
  CHECK(det_rows == 3);

  const auto report = nlohmann::json::parse(slurp(dir.file("report.json")));
  CHECK(report["robust"]["c_da_total_eur"].get<double>() ==
        Catch::Approx(robust_cda).margin(1e-9));
  CHECK(report["robust"]["d_rt_total_kwh"].get<double>() ==
        Catch::Approx(robust_drt).margin(1e-9));
  CHECK(report["deterministic"]["c_da_total_eur"].get<double>() ==
        Catch::Approx(det_cda).margin(1e-9));
  CHECK(report["deterministic"]["d_rt_total_kwh"].get<double>() ==
        Catch::Approx(det_drt).margin(1e-9));
  CHECK(report["robust"]["p_da_kw_per_day"].size() == 3);
}

TEST_CASE("empty day filter is an error") {
  TempDir dir;
  write_config(dir.file("gen.cfg"), 2, 31, 10);
  RunConfig rc;
  rc.config_path = dir.file("gen.cfg");
  rc.out_dir = dir.str();
  REQUIRE(cmd_generate(rc) == 0);
  rc.days = 0;
  CHECK_THROWS_AS(cmd_month(rc), ValidationError);
  rc.days = 2;
  rc.vehicles = 99;
  CHECK_THROWS_AS(cmd_month(rc), ValidationError);
}

TEST_CASE("verify passes on default seeds and emits machine-readable JSON") {
  TempDir dir;
  RunConfig rc;
  rc.out_dir = dir.str();
  rc.seed = 11;
  rc.verify_oracle_trials = 40;
  rc.verify_solve_trials = 6;
  REQUIRE(cmd_verify(rc) == 0);
  const auto js = nlohmann::json::parse(slurp(dir.file("verify.json")));
  CHECK(js["all_passed"].get<bool>());
  CHECK(js["suites"]["oracle_equivalence"]["fail"].get<int>() == 0);
  CHECK(js["suites"]["integrality"]["pass"].get<int>() == 40);
  CHECK(js["suites"]["ccg_vs_milp"]["fail"].get<int>() == 0);
}

TEST_CASE("an injected bad big-M makes verify fail") {
  TempDir dir;
  RunConfig rc;
  rc.out_dir = dir.str();
  rc.seed = 11;
  rc.verify_oracle_trials = 5;
  rc.verify_solve_trials = 8;
  rc.bigm_scale = 0.4;  // M < C_max cuts off valid plans
  CHECK(cmd_verify(rc) != 0);
  const auto js = nlohmann::json::parse(slurp(dir.file("verify.json")));
  CHECK_FALSE(js["all_passed"].get<bool>());
  CHECK(js["suites"]["ccg_vs_milp"]["fail"].get<int>() > 0);
}

TEST_CASE("solve rejects an unknown day and method") {
  TempDir dir;
  write_config(dir.file("gen.cfg"), 2, 30, 10);
  RunConfig rc;
  rc.config_path = dir.file("gen.cfg");
  rc.out_dir = dir.str();
  REQUIRE(cmd_generate(rc) == 0);
  rc.day = 999;
  CHECK_THROWS_AS(cmd_solve(rc), DataError);
  rc.day = -1;
  rc.method = "psychic";
  CHECK_THROWS_AS(cmd_solve(rc), ValidationError);
}
