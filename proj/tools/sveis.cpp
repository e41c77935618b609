// sveis: thresholds, simulation, and persistence/extinction checks for the stochastic SVEIS model.

#include "sveis/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv)
{
  CLI::App app{"Stochastic SVEIS model with Black-Karasinski transmission"};
  app.set_version_flag("--version", std::string(sveis::kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  sveis::cli::Options opt;
  std::string config, out = ".";
  std::uint64_t seed = 0;
  unsigned threads = 0;
  app.add_option("--config", config, "JSON config file")->required();
  app.add_option("--out", out, "output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "master seed, overrides the config");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads (default: $SVEIS_THREADS or all cores)");

  app.add_subcommand("thresholds", "print R0, R0^s, R0^e, the DFE and the predicted regime as JSON");
  app.add_subcommand("dfe", "print the disease-free equilibrium as JSON");
  app.add_subcommand("simulate", "write one trajectory CSV per path and a manifest");
  app.add_subcommand("persistence", "run an ensemble and test for a stationary, persistent I");
  app.add_subcommand("extinction", "run an ensemble and test the exponential extinction rate");

  try {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sveis::cli::kConfigError;
  }

  opt.config = config;
  opt.out = out;
  if (*seed_opt) opt.seed = seed;
  if (*threads_opt) opt.threads = threads;

  const std::string command = app.get_subcommands().front()->get_name();
  return sveis::cli::run(command, opt, std::cout, std::cerr);
}
