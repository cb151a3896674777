#include <CLI11.hpp>

#include "npp/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Finite-volume electromigration-diffusion simulator with free-energy monitors"};
  app.require_subcommand(1);
  app.fallthrough();

  npp::CliFlags flags;
  app.add_option("--output-dir", flags.output_dir, "override the config's output directory");
  app.add_option("--jobs", flags.jobs, "worker pool size for sweeps");
  app.add_flag("--quiet", flags.quiet, "suppress progress output");

  std::string run_config, sweep_config, eq_config;
  std::string fixture_dir = "fixtures";

  auto* run = app.add_subcommand("run", "advance one configuration and write diagnostics");
  run->add_option("config", run_config, "configuration file")->required();

  auto* sweep = app.add_subcommand("sweep", "run the eta continuation study");
  sweep->add_option("config", sweep_config, "configuration file")->required();

  auto* verify = app.add_subcommand("verify", "run the property suite against the fixtures");
  verify->add_option("dir", fixture_dir, "fixture directory (default: fixtures)");

  auto* eq = app.add_subcommand("equilibrium", "solve the steady Boltzmann state");
  eq->add_option("config", eq_config, "configuration file")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return npp::cmd_run(run_config, flags);
  if (sweep->parsed()) return npp::cmd_sweep(sweep_config, flags);
  if (verify->parsed()) return npp::cmd_verify(fixture_dir, flags);
  if (eq->parsed()) return npp::cmd_equilibrium(eq_config, flags);
  return npp::kExitConfig;
}
