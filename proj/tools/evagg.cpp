// Command-line front end: data generation, day-ahead solves, the monthly
// rolling-horizon backtest, and the self-verification suites.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "evagg/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "evagg - day-ahead scheduling for an EV aggregator under uncertain "
      "availability (robust and deterministic models, real-time validation).\n"
      "Worker count is capped by the EVAGG_THREADS environment variable."};
  app.require_subcommand(1);

  evagg::RunConfig rc;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", rc.config_path, "generator/fleet config file");
    cmd->add_option("--out", rc.out_dir, "output directory")->capture_default_str();
  };
  auto add_data_inputs = [&](CLI::App* cmd) {
    cmd->add_option("--history", rc.history_path, "history.csv path (default <out>/history.csv)");
    cmd->add_option("--prices", rc.prices_path, "prices.csv path (default <out>/prices.csv)");
    cmd->add_option("--method", rc.method, "robust|deterministic|both")->capture_default_str();
    cmd->add_option("--lookback", rc.lookback, "forecast lookback in days")->capture_default_str();
    cmd->add_option("--penalty", rc.penalty, "slack penalty, EUR/kWh")->capture_default_str();
    cmd->add_option("--gap", rc.gap, "branch-and-bound gap target")->capture_default_str();
    cmd->add_option("--dump-mps", rc.dump_mps_dir, "dump each model as MPS into this directory");
    cmd->add_option("--vehicles", rc.vehicles, "restrict to the first N vehicles (0 = all)");
  };

  CLI::App* generate = app.add_subcommand("generate", "write seeded history.csv and prices.csv");
  add_common(generate);
  generate->add_option("--seed", rc.seed, "override the config seed")
      ->each([&](const std::string&) { rc.seed_set = true; });

  CLI::App* solve = app.add_subcommand("solve", "solve one day-ahead problem");
  add_common(solve);
  add_data_inputs(solve);
  solve->add_option("--day", rc.day, "date index to solve (default: last day)");

  CLI::App* month = app.add_subcommand("month", "rolling-horizon monthly backtest");
  add_common(month);
  add_data_inputs(month);
  month->add_option("--days", rc.days, "number of evaluated days")->capture_default_str();

  CLI::App* verify = app.add_subcommand("verify", "run the seeded self-check suites");
  add_common(verify);
  verify->add_option("--seed", rc.seed, "suite seed")->capture_default_str();
  verify->add_option("--oracle-trials", rc.verify_oracle_trials, "worst-case comparisons")
      ->capture_default_str();
  verify->add_option("--solve-trials", rc.verify_solve_trials, "robust solve comparisons")
      ->capture_default_str();
  verify
      ->add_option("--bigm-scale", rc.bigm_scale,
                   "scale the big-M constant (values < 1 inject a deliberate fault)")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return evagg::cmd_generate(rc);
    if (solve->parsed()) return evagg::cmd_solve(rc);
    if (month->parsed()) return evagg::cmd_month(rc);
    if (verify->parsed()) return evagg::cmd_verify(rc);
  } catch (const evagg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
