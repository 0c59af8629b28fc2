// Command-line surface: one subcommand per experiment kind, configuration
// from a key-value file with flag overrides (flags win).

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "opdyn/config.hpp"
#include "opdyn/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mean-field opinion dynamics toolkit"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  int workers = 0;
  app.add_option("--config", config_path, "Config file (key = value sections)");
  app.add_option("--seed", seed, "Master RNG seed (overrides the config)");
  app.add_option("--out-dir", out_dir, "Output directory (overrides the config)");
  app.add_option("--workers", workers, "Worker threads (overrides the config)");

  const char* kinds[] = {"simulate-finite", "solve-limit", "coupling-error",
                         "invariant",       "phase-diagram", "figure1",
                         "figure2",         "figure3",       "selftest"};
  for (const char* kind : kinds) app.add_subcommand(kind)->fallthrough();

  CLI11_PARSE(app, argc, argv);

  opdyn::ExperimentConfig config;
  try {
    if (!config_path.empty()) config = opdyn::load_config_file(config_path);
    const auto subs = app.get_subcommands();
    if (!subs.empty()) config.kind = opdyn::parse_kind(subs.front()->get_name());
    if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (workers > 0) config.workers = workers;
    if (config_path.empty() && subs.empty()) {
      std::cerr << "config error: choose a subcommand or pass --config\n";
      return opdyn::kExitConfigError;
    }
  } catch (const opdyn::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return opdyn::kExitConfigError;
  }

  return opdyn::run_experiment_cli(config, std::cout, std::cerr);
}
