// Command-line experiment runner.
//
//   polychain run <config> [--seed N] [--threads N] [--out DIR] [--quiet]
//   polychain report <dir>
//
// Exit codes: 0 success, 2 validation error, 3 unconverged MCMC, 1 internal
// error. POLYCHAIN_OUT_ROOT sets the default output root when neither the
// config nor --out names a directory.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "polychain/experiments.hpp"
#include "polychain/montecarlo.hpp"
#include "polychain/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"polychain: drifted self-repelling polymers as decoupled Ising chains"};
  app.set_version_flag("--version", polychain::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
  bool quiet = false;

  auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a config file");
  run_cmd->add_option("config", config_path, "Path to the experiment config")->required();
  run_cmd->add_option("--seed", seed, "Override the config seed");
  run_cmd->add_option("--threads", threads, "Worker threads for independent tasks");
  run_cmd->add_option("--out", out_dir, "Output directory (overrides config and environment)");
  run_cmd->add_flag("--quiet", quiet, "Suppress progress lines");

  std::string report_dir;
  auto* report_cmd = app.add_subcommand("report", "Summarize the results in a run directory");
  report_cmd->add_option("dir", report_dir, "Run directory containing manifest.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      polychain::RunOptions options;
      options.seed = seed;
      options.threads = threads;
      if (out_dir) options.out_dir = *out_dir;
      options.quiet = quiet;
      const polychain::RunOutcome outcome = polychain::run_experiment(config_path, options);
      if (!quiet) {
        std::cerr << "results in " << outcome.out_dir.string()
                  << (outcome.exit_code == 3 ? " (unconverged)" : "") << "\n";
      }
      return outcome.exit_code;
    }
    return polychain::report_directory(report_dir, std::cout);
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const polychain::invariant_error& e) {
    std::cerr << "internal error at sweep " << e.sweep_index << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
