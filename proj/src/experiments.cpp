#include "opdyn/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "opdyn/coupling.hpp"
#include "opdyn/csv.hpp"
#include "opdyn/finite_system.hpp"
#include "opdyn/invariant.hpp"
#include "opdyn/limit_sde.hpp"
#include "opdyn/selftest.hpp"

namespace opdyn {

namespace {

namespace fs = std::filesystem;

std::ofstream open_output(const ExperimentConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  const fs::path path = fs::path(cfg.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_provenance(out, cfg.hash(), cfg.seed);
  return out;
}

void write_trajectory(std::ofstream& out, const Trajectory& traj,
                      bool with_actors) {
  out << "t,mean_pressure,total_jumps";
  if (with_actors && !traj.actor_rows.empty()) {
    for (std::size_t a = 0; a < traj.actor_rows.front().size(); ++a)
      out << ",u_" << a;
  }
  out << '\n';
  for (std::size_t i = 0; i < traj.grid.size(); ++i) {
    const GridSample& g = traj.grid[i];
    out << format_g17(g.t) << ',' << format_g17(g.mean_pressure) << ','
        << g.total_jumps;
    if (with_actors && !traj.actor_rows.empty()) {
      for (double u : traj.actor_rows[i]) out << ',' << format_g17(u);
    }
    out << '\n';
  }
}

void write_events(std::ofstream& out, const Trajectory& traj) {
  out << "time,actor,opinion\n";
  for (const EventRecord& e : traj.events)
    out << format_g17(e.time) << ',' << e.actor << ',' << e.opinion << '\n';
}

void run_simulate_finite(const ExperimentConfig& cfg, std::ostream& log) {
  ModelParams params;
  params.n_actors = cfg.model.n;
  params.h = cfg.model.h;
  params.rate = cfg.make_rate();
  params.horizon = cfg.model.horizon;
  params.seed = cfg.seed;
  params.initial = cfg.make_initial();
  SimulateOptions opt;
  opt.grid_points = cfg.model.grid_points;
  opt.record_events = cfg.model.record_events;
  opt.record_actor_pressures = cfg.model.record_actors;
  const Trajectory traj = simulate(params, opt);
  {
    std::ofstream out = open_output(cfg, "trajectory.csv");
    write_trajectory(out, traj, cfg.model.record_actors);
  }
  if (cfg.model.record_events) {
    std::ofstream out = open_output(cfg, "events.csv");
    write_events(out, traj);
  }
  if (traj.bound_violation > 0.0)
    throw std::runtime_error("pathwise bound violated: excess " +
                             format_g17(traj.bound_violation));
  log << "simulate-finite: " << traj.grid.size() << " grid samples, "
      << traj.grid.back().total_jumps << " jumps, mean(T)="
      << format_g17(traj.grid.back().mean_pressure) << "\n";
}

DriftCurve solve_drift(const ExperimentConfig& cfg, PicardDiagnostics* diag) {
  PicardConfig pc;
  pc.sample_paths = cfg.limit.sample_paths;
  pc.cells_per_unit_time = cfg.limit.cells_per_unit_time;
  pc.tolerance = cfg.limit.tolerance;
  pc.max_iterations = cfg.limit.max_iterations;
  pc.window_override = cfg.limit.window;
  pc.workers = cfg.workers;
  return picard_solve(cfg.make_rate(), cfg.model.h, cfg.make_initial(),
                      cfg.model.horizon, pc, cfg.seed, diag);
}

void run_solve_limit(const ExperimentConfig& cfg, std::ostream& log) {
  PicardDiagnostics diag;
  const DriftCurve drift = solve_drift(cfg, &diag);
  {
    std::ofstream out = open_output(cfg, "drift.csv");
    drift.write_csv(out);
  }
  {
    std::ofstream out = open_output(cfg, "solve_summary.txt");
    out << "windows " << diag.windows_used << "\n";
    out << "tolerance " << format_g17(diag.tolerance_used) << "\n";
    out << "max_curve_std_error " << format_g17(diag.max_curve_std_error)
        << "\n";
    out << "truncation_radius " << format_g17(diag.truncation_radius) << "\n";
    out << "pathwise_sup " << format_g17(diag.pathwise_sup) << "\n";
    out << "clamp_hits " << diag.clamp_hits << "\n";
    out << "jump_size_integral " << format_g17(diag.jump_size_integral)
        << " bound " << format_g17(diag.jump_size_integral_bound) << "\n";
    for (std::size_t w = 0; w < diag.window_residuals.size(); ++w) {
      out << "window " << w << " residuals";
      for (double r : diag.window_residuals[w]) out << ' ' << format_g17(r);
      out << "\n";
    }
  }
  log << "solve-limit: " << drift.nodes() << " nodes, " << diag.windows_used
      << " window(s), a_plus(T)-a_minus(T)="
      << format_g17(drift.a_plus_nodes().back() - drift.a_minus_nodes().back())
      << "\n";
}

void run_coupling_error(const ExperimentConfig& cfg, std::ostream& log) {
  const DriftCurve drift = solve_drift(cfg, nullptr);
  const std::vector<ErrorCurveRow> rows = strong_error_curve(
      cfg.make_rate(), cfg.model.h, cfg.make_initial(), cfg.model.horizon,
      cfg.coupling.ns, cfg.coupling.replicas, cfg.seed, drift, cfg.workers);
  {
    std::ofstream out = open_output(cfg, "error_curve.csv");
    out << "N,mean_sup_error,std_error,replicas\n";
    for (const auto& row : rows)
      out << row.n_actors << ',' << format_g17(row.mean_sup_error) << ','
          << format_g17(row.std_error) << ',' << row.replicas << '\n';
  }
  const LineFit fit = fit_rate(rows);
  {
    std::ofstream out = open_output(cfg, "rate_fit.txt");
    out << "slope " << format_g17(fit.slope) << "\n";
    out << "intercept " << format_g17(fit.intercept) << "\n";
    out << "r_squared " << format_g17(fit.r_squared) << "\n";
  }
  log << "coupling-error: slope " << format_g17(fit.slope) << " r^2 "
      << format_g17(fit.r_squared) << "\n";
}

void run_invariant(const ExperimentConfig& cfg, std::ostream& log) {
  const RateFunction rate = cfg.make_rate();
  const double h = cfg.model.h;
  double gamma = cfg.invariant.gamma;
  GammaSolution sol;
  if (gamma == 0.0) {
    sol = solve_gamma(rate, h, cfg.invariant.residual_tol);
    gamma = sol.positive_root();
  } else {
    sol.roots = {0.0, gamma, -gamma};
    sol.residual_tol = cfg.invariant.residual_tol;
  }
  {
    std::ofstream out = open_output(cfg, "gamma_roots.txt");
    out << "roots";
    for (double r : sol.roots) out << ' ' << format_g17(r);
    out << "\n";
    if (sol.threshold)
      out << "threshold " << format_g17(*sol.threshold) << "\n";
    if (gamma != 0.0)
      out << "residual " << format_g17(gamma_residual(rate, h, gamma)) << "\n";
  }
  if (gamma == 0.0) {
    log << "invariant: only the point mass at 0 (h below threshold)\n";
    return;
  }
  const InvariantDensity density(rate, h, gamma);
  // Dump out to the 1 - 1e-6 quantile.
  double x_hi = 1.0;
  while (density.cdf(x_hi) < 1.0 - 1e-6) x_hi *= 2.0;
  {
    std::ofstream out = open_output(cfg, "density.csv");
    out << "x,g(x)\n";
    for (int i = 0; i < cfg.invariant.density_points; ++i) {
      const double x =
          x_hi * static_cast<double>(i) / (cfg.invariant.density_points - 1);
      const double xs = density.support_sign() > 0 ? x : -x;
      out << format_g17(xs) << ',' << format_g17(density.value(xs)) << '\n';
    }
  }
  const double norm_check =
      expected_return_time(rate, h, std::abs(gamma), 0.0) * h * std::abs(gamma);
  log << "invariant: gamma*=" << format_g17(gamma) << " mean="
      << format_g17(density.mean()) << " norm=" << format_g17(density.norm_const())
      << " E[tau_0]*h*gamma=" << format_g17(norm_check) << "\n";
}

void run_phase_diagram(const ExperimentConfig& cfg, std::ostream& log) {
  const std::vector<PhaseDiagramRow> rows = phase_diagram(
      cfg.make_rate(), cfg.invariant.h_grid, cfg.invariant.residual_tol);
  std::ofstream out = open_output(cfg, "phase_diagram.csv");
  out << "h,gamma_star,invariant_mean\n";
  for (const auto& row : rows)
    out << format_g17(row.h) << ',' << format_g17(row.gamma_star) << ','
        << format_g17(row.invariant_mean) << '\n';
  log << "phase-diagram: " << rows.size() << " rows\n";
}

void run_figure(const ExperimentConfig& cfg, std::ostream& log, int figure) {
  // Pinned reproduction parameters: N=1000, T=15, 10 runs per arm.
  const bool exponential_family = (figure == 3);
  struct Arm {
    double h;
    bool split_initial;  // +-1 split across runs vs all-zero start
  };
  std::vector<Arm> arms;
  if (figure == 2) {
    arms.push_back({1.0, true});
  } else {
    arms.push_back({0.5, true});
    arms.push_back({2.0, false});
  }

  std::ofstream manifest = open_output(cfg, "manifest.csv");
  manifest << "file,family,h,initial,replica,seed\n";
  int replica = 0;
  for (const Arm& arm : arms) {
    for (int r = 0; r < 10; ++r, ++replica) {
      ModelParams params;
      params.n_actors = 1000;
      params.h = arm.h;
      params.rate = exponential_family ? RateFunction::exponential()
                                       : RateFunction::tanh_plus_one();
      params.horizon = 15.0;
      params.seed = cfg.seed;
      params.initial = arm.split_initial
                           ? InitialCondition::constant(r < 5 ? 1.0 : -1.0)
                           : InitialCondition::constant(0.0);
      SimulateOptions opt;
      opt.grid_points = 300;
      opt.replica = replica;
      const Trajectory traj = simulate(params, opt);
      char name[64];
      std::snprintf(name, sizeof(name), "figure%d_h%g_rep%02d.csv", figure,
                    arm.h, r);
      std::ofstream out = open_output(cfg, name);
      write_trajectory(out, traj, false);
      manifest << name << ',' << params.rate.name() << ',' << format_g17(arm.h)
               << ',' << params.initial.describe() << ',' << replica << ','
               << cfg.seed << '\n';
      if (traj.bound_violation > 0.0)
        throw std::runtime_error("pathwise bound violated in figure run");
    }
  }
  log << "figure" << figure << ": " << replica << " trajectories written\n";
}

void run_selftest(const ExperimentConfig& cfg, std::ostream& log) {
  const std::vector<CriterionResult> results =
      run_acceptance_suite(cfg.seed, cfg.workers);
  bool all = true;
  for (const auto& r : results) {
    log << (r.passed ? "[PASS] " : "[FAIL] ") << "criterion " << r.index << ": "
        << r.name << " (" << r.detail << ") [" << format_g17(r.seconds)
        << " s]\n";
    all &= r.passed;
  }
  if (!all) throw std::runtime_error("acceptance criteria failed");
}

}  // namespace

void run_experiment(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  switch (config.kind) {
    case ExperimentKind::simulate_finite: run_simulate_finite(config, log); return;
    case ExperimentKind::solve_limit: run_solve_limit(config, log); return;
    case ExperimentKind::coupling_error: run_coupling_error(config, log); return;
    case ExperimentKind::invariant: run_invariant(config, log); return;
    case ExperimentKind::phase_diagram: run_phase_diagram(config, log); return;
    case ExperimentKind::figure1: run_figure(config, log, 1); return;
    case ExperimentKind::figure2: run_figure(config, log, 2); return;
    case ExperimentKind::figure3: run_figure(config, log, 3); return;
    case ExperimentKind::selftest: run_selftest(config, log); return;
  }
}

int run_experiment_cli(const ExperimentConfig& config, std::ostream& log,
                       std::ostream& err) {
  try {
    run_experiment(config, log);
    return kExitOk;
  } catch (const config_error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumericalError;
  }
}

}  // namespace opdyn
