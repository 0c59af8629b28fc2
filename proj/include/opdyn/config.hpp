#ifndef OPDYN_CONFIG_HPP
#define OPDYN_CONFIG_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "opdyn/finite_system.hpp"
#include "opdyn/rates.hpp"

namespace opdyn {

class config_error : public std::runtime_error {
 public:
  config_error(const std::string& message, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                    : message),
        line_number(line) {}
  int line_number;
};

enum class ExperimentKind {
  simulate_finite,
  solve_limit,
  coupling_error,
  invariant,
  phase_diagram,
  figure1,
  figure2,
  figure3,
  selftest,
};

ExperimentKind parse_kind(const std::string& name);
std::string kind_name(ExperimentKind kind);

struct ModelSection {
  std::string family = "tanh_plus_one";  // tanh_plus_one | exponential | tanh_affine
  double affine_b = 1.0;                 // B for tanh_affine (phi = tanh + B)
  int n = 1000;
  double h = 0.5;
  double horizon = 15.0;
  std::string initial = "constant:1";    // constant:<c> | uniform:<L> | two_point:<L>
  int grid_points = 301;
  bool record_events = false;
  bool record_actors = false;
};

struct LimitSection {
  int sample_paths = 100000;
  int cells_per_unit_time = 512;
  double tolerance = 0.0;  // 0 = auto
  int max_iterations = 50;
  double window = 0.0;  // 0 = auto
};

struct CouplingSection {
  std::vector<int> ns = {25, 50, 100, 200, 400, 800};
  int replicas = 100;
};

struct InvariantSection {
  double gamma = 0.0;  // 0 = solve for the positive root first
  double residual_tol = 1e-10;
  std::vector<double> h_grid = {0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0, 4.0};
  int samples = 100000;
  double spacing = 0.5;
  double burn_in = 50.0;
  double y0 = 0.0;
  int density_points = 512;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::selftest;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int workers = 1;
  ModelSection model;
  LimitSection limit;
  CouplingSection coupling;
  InvariantSection invariant;

  RateFunction make_rate() const;
  InitialCondition make_initial() const;
  void validate() const;
  std::string canonical() const;  // stable serialization, hashed for provenance
  std::uint64_t hash() const;
};

// Key-value config file: [section] headers, key = value lines, '#' comments.
// Unknown sections or keys are rejected with their line number.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

}  // namespace opdyn

#endif  // OPDYN_CONFIG_HPP
