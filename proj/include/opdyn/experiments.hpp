#ifndef OPDYN_EXPERIMENTS_HPP
#define OPDYN_EXPERIMENTS_HPP

#include <ostream>

#include "opdyn/config.hpp"

namespace opdyn {

// Exit codes of the command-line surface.
constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitNumericalError = 2;

// Dispatches one experiment, writing its output files under config.out_dir.
// Progress and summaries go to `log`. Throws config_error for configuration
// problems; other exceptions indicate numerical failures.
void run_experiment(const ExperimentConfig& config, std::ostream& log);

// run_experiment wrapped into the exit-code contract.
int run_experiment_cli(const ExperimentConfig& config, std::ostream& log,
                       std::ostream& err);

}  // namespace opdyn

#endif  // OPDYN_EXPERIMENTS_HPP
