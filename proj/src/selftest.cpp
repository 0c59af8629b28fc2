#include "opdyn/selftest.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "opdyn/coupling.hpp"
#include "opdyn/finite_system.hpp"
#include "opdyn/invariant.hpp"
#include "opdyn/limit_sde.hpp"
#include "opdyn/parallel.hpp"
#include "opdyn/rates.hpp"
#include "opdyn/stats.hpp"

namespace opdyn {

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << "FAILED: " << what << "; ";
    }
  }
  template <class T>
  Check& operator<<(const T& v) {
    detail << v;
    return *this;
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.5g", x);
  return buf;
}

double solve_gamma_star(double h) {
  return solve_gamma(RateFunction::tanh_plus_one(), h).positive_root();
}

// 1. Phase transition threshold: roots {0} up to h = 1, three roots above.
Check criterion_phase_transition(std::uint64_t, int) {
  Check c;
  const RateFunction rf = RateFunction::tanh_plus_one();
  for (double h : {0.25, 0.5, 0.9, 1.0}) {
    const GammaSolution sol = solve_gamma(rf, h, 1e-10);
    c.require(sol.roots.size() == 1 && sol.roots[0] == 0.0,
              "h=" + fmt(h) + " expected only the zero root");
    c.require(sol.threshold.has_value() && std::abs(*sol.threshold - 1.0) < 1e-12,
              "threshold should be 1");
  }
  for (double h : {1.1, 1.5, 2.0, 4.0}) {
    const GammaSolution sol = solve_gamma(rf, h, 1e-10);
    const double gs = sol.positive_root();
    c.require(sol.roots.size() == 3, "h=" + fmt(h) + " expected three roots");
    c.require(gs > 0.0, "h=" + fmt(h) + " expected a positive root");
    c.require(std::abs(gamma_residual(rf, h, gs)) < 1e-10,
              "h=" + fmt(h) + " residual above 1e-10");
    bool negated = false;
    for (double r : sol.roots) negated |= (r == -gs);
    c.require(negated, "h=" + fmt(h) + " roots not closed under negation");
    c << "gamma*(" << fmt(h) << ")=" << fmt(gs) << " ";
  }
  return c;
}

// 2. Closed-form density for constant big_phi: exponential with mean gamma*h/2.
Check criterion_density_closed_form(std::uint64_t, int) {
  Check c;
  const RateFunction rf = RateFunction::tanh_plus_one();
  const double h = 2.0;
  const double gs = solve_gamma_star(h);
  const InvariantDensity density(rf, h, gs, 1e-10);
  const double scale = gs * h;
  double max_err = 0.0;
  const int points = 2001;
  for (int i = 0; i < points; ++i) {
    const double x = 10.0 * scale * i / (points - 1);
    const double closed = (2.0 / scale) * std::exp(-2.0 * x / scale);
    max_err = std::max(max_err, std::abs(density.value(x) - closed));
  }
  c.require(max_err < 1e-8, "max density error " + fmt(max_err) + " >= 1e-8");
  c << "gamma*=" << fmt(gs) << " max_abs_err=" << fmt(max_err);
  return c;
}

// 3. House-of-cards long-run samples against the stationary density.
Check criterion_house_of_cards(std::uint64_t seed, int) {
  Check c;
  const RateFunction rf = RateFunction::tanh_plus_one();
  const double h = 2.0;
  const double gs = solve_gamma_star(h);
  PhiloxRng rng(seed, stream_id(StreamPurpose::house_of_cards, 3));
  std::vector<double> samples =
      house_of_cards_samples(rf, h, gs, 0.0, 50.0, 100000, 0.5, rng);
  std::sort(samples.begin(), samples.end());
  const double scale = gs * h;
  const double ks = ks_statistic_sorted(samples, [&](double x) {
    return x <= 0.0 ? 0.0 : 1.0 - std::exp(-2.0 * x / scale);
  });
  c.require(ks < 0.02, "KS distance " + fmt(ks) + " >= 0.02");
  c << "n=100000 ks=" << fmt(ks);
  return c;
}

// 4. Figure-reproduction behavior at N=1000: decay to 0 below the threshold,
// two-sided plateau near gamma* h / 2 above it.
Check criterion_figure1(std::uint64_t seed, int workers) {
  Check c;
  const RateFunction rf = RateFunction::tanh_plus_one();
  const double plateau = solve_gamma_star(2.0) * 2.0 / 2.0;

  std::vector<double> low_fin(10), high_fin(10);
  double worst_violation = 0.0;
  parallel_for(20, workers, [&](int i) {
    ModelParams params;
    params.n_actors = 1000;
    params.rate = rf;
    params.horizon = 15.0;
    params.seed = seed;
    SimulateOptions opt;
    opt.grid_points = 301;
    if (i < 10) {
      params.h = 0.5;
      params.initial = InitialCondition::constant(i < 5 ? 1.0 : -1.0);
      opt.replica = i;
      const Trajectory t = simulate(params, opt);
      low_fin[i] = t.grid.back().mean_pressure;
      worst_violation = std::max(worst_violation, t.bound_violation);
    } else {
      params.h = 2.0;
      params.initial = InitialCondition::constant(0.0);
      opt.replica = 100 + (i - 10);
      const Trajectory t = simulate(params, opt);
      high_fin[i - 10] = t.grid.back().mean_pressure;
      worst_violation = std::max(worst_violation, t.bound_violation);
    }
  });

  for (int r = 0; r < 10; ++r)
    c.require(std::abs(low_fin[r]) < 0.1,
              "h=0.5 replica " + std::to_string(r) + " |mean(T)|=" +
                  fmt(std::abs(low_fin[r])) + " >= 0.1");
  int in_band = 0, positive = 0, negative = 0;
  for (int r = 0; r < 10; ++r) {
    const double m = std::abs(high_fin[r]);
    if (m > 0.8 * plateau && m < 1.2 * plateau) ++in_band;
    (high_fin[r] > 0 ? positive : negative) += 1;
  }
  c.require(in_band >= 9, "h=2 plateau band hit only " +
                              std::to_string(in_band) + "/10");
  c.require(positive > 0 && negative > 0,
            "h=2 runs did not produce both signs");
  c.require(worst_violation <= 0.0, "pathwise bound violated");
  c << "plateau=" << fmt(plateau) << " in_band=" << in_band << "/10 signs=+"
    << positive << "/-" << negative;
  return c;
}

// 5. Strong convergence exponent of the coupled error.
Check criterion_strong_error(std::uint64_t seed, int workers) {
  Check c;
  const RateFunction rf = RateFunction::tanh_plus_one();
  const double h = 0.5, horizon = 5.0;
  const InitialCondition init = InitialCondition::constant(1.0);

  PicardConfig pc;
  pc.sample_paths = 200000;
  pc.tolerance = 0.0015;
  pc.max_iterations = 80;
  pc.workers = workers;
  const DriftCurve drift = picard_solve(rf, h, init, horizon, pc, seed ^ 0x51);

  const std::vector<int> ns = {25, 50, 100, 200, 400, 800};
  const std::vector<ErrorCurveRow> rows =
      strong_error_curve(rf, h, init, horizon, ns, 100, seed ^ 0x52, drift,
                         workers);
  const LineFit fit = fit_rate(rows);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i)
    c.require(rows[i + 1].mean_sup_error < rows[i].mean_sup_error,
              "mean error not decreasing in N");
  c.require(fit.slope > -0.65 && fit.slope < -0.40,
            "slope " + fmt(fit.slope) + " outside [-0.65,-0.40]");
  c.require(fit.r_squared > 0.9, "r^2 " + fmt(fit.r_squared) + " <= 0.9");
  for (const auto& row : rows)
    c << "e(" << row.n_actors << ")=" << fmt(row.mean_sup_error) << " ";
  c << "slope=" << fmt(fit.slope) << " r2=" << fmt(fit.r_squared);
  return c;
}

// 6. Jump-count domination at the deciles plus the per-actor mean bound.
Check criterion_jump_dominance(std::uint64_t seed, int workers) {
  Check c;
  ModelParams params;
  params.n_actors = 50;
  params.h = 0.5;
  params.rate = RateFunction::tanh_plus_one();
  params.horizon = 1.0;
  params.seed = seed ^ 0x6;
  params.initial = InitialCondition::iid_uniform(1.0);
  const DominanceReport rep = check_jump_dominance(params, 500, workers);
  c.require(rep.decile_pass, "decile dominance failed");
  c.require(rep.mean_pass, "per-actor mean bound failed");
  double worst = 1.0;
  for (const auto& row : rep.rows) worst = std::min(worst, row.margin);
  c << "min_margin=" << fmt(worst) << " mean=" << fmt(rep.mean_jumps_per_actor)
    << " bound=" << fmt(rep.mean_bound);
  return c;
}

// 7. Pathwise a priori bounds on finite trajectories and limit paths.
Check criterion_pathwise_bounds(std::uint64_t seed, int workers) {
  Check c;
  {
    ModelParams params;
    params.n_actors = 200;
    params.h = 2.0;
    params.rate = RateFunction::tanh_plus_one();
    params.horizon = 5.0;
    params.seed = seed ^ 0x71;
    params.initial = InitialCondition::iid_uniform(1.0);
    SimulateOptions opt;
    opt.grid_points = 101;
    const Trajectory t = simulate(params, opt);
    c.require(t.bound_violation <= 0.0,
              "finite pathwise bound violated (tanh family)");
  }
  {
    ModelParams params;
    params.n_actors = 50;
    params.h = 0.3;
    params.rate = RateFunction::exponential();
    params.horizon = 2.0;
    params.seed = seed ^ 0x72;
    params.initial = InitialCondition::iid_two_point(0.5);
    SimulateOptions opt;
    opt.grid_points = 101;
    const Trajectory t = simulate(params, opt);
    c.require(t.bound_violation <= 0.0,
              "finite pathwise bound violated (exponential family)");
  }
  {
    const RateFunction rf = RateFunction::tanh_plus_one();
    const double h = 2.0, horizon = 2.0, support = 1.0;
    PicardConfig pc;
    pc.sample_paths = 20000;
    pc.workers = workers;
    const DriftCurve drift = picard_solve(
        rf, h, InitialCondition::iid_two_point(support), horizon, pc, seed ^ 0x73);
    const double gamma_t = apriori_gamma(support, horizon, h, rf);
    double worst = 0.0;
    std::vector<double> sups(10000);
    parallel_for(10000, workers, [&](int p) {
      PhiloxRng rng(seed ^ 0x74, stream_id(StreamPurpose::limit_path, p));
      const double u0 = (rng.next_u32() & 1u) ? support : -support;
      const LimitPath path =
          sample_limit_path(rf, h, drift, u0, rng, horizon, gamma_t);
      sups[p] = path.recorded_sup_abs;
    });
    for (double s : sups) worst = std::max(worst, s);
    c.require(worst <= gamma_t + 1e-9,
              "limit path sup " + fmt(worst) + " exceeds gamma_T " + fmt(gamma_t));
    c << "limit_sup=" << fmt(worst) << " gamma_T=" << fmt(gamma_t);
  }
  return c;
}

// 8. Propagation-of-chaos cross-check: Picard drift vs the N=4000 empirical
// curve, node by node, within 4 combined standard errors.
Check criterion_picard_particle(std::uint64_t seed, int workers) {
  Check c;
  const RateFunction rf = RateFunction::tanh_plus_one();
  const double h = 2.0, horizon = 5.0;
  const InitialCondition init = InitialCondition::constant(1.0);

  PicardConfig pc;
  pc.sample_paths = 100000;
  pc.tolerance = 0.002;
  pc.max_iterations = 80;
  pc.workers = workers;
  PicardDiagnostics diag;
  const DriftCurve drift =
      picard_solve(rf, h, init, horizon, pc, seed ^ 0x81, &diag);
  const int nodes = drift.nodes();

  constexpr int kReplicas = 16;
  std::vector<std::vector<double>> plus(kReplicas), minus(kReplicas);
  parallel_for(kReplicas, workers, [&](int r) {
    ModelParams params;
    params.n_actors = 4000;
    params.h = h;
    params.rate = rf;
    params.horizon = horizon;
    params.seed = seed ^ 0x82;
    params.initial = init;
    SimulateOptions opt;
    opt.grid_points = nodes;
    opt.record_phi_means = true;
    opt.replica = r;
    Trajectory t = simulate(params, opt);
    plus[r] = std::move(t.phi_plus_mean);
    minus[r] = std::move(t.phi_minus_mean);
  });

  int worst_node = -1;
  double worst_ratio = 0.0;
  for (int k = 0; k < nodes; ++k) {
    double mp = 0.0, mm = 0.0;
    for (int r = 0; r < kReplicas; ++r) {
      mp += plus[r][k];
      mm += minus[r][k];
    }
    mp /= kReplicas;
    mm /= kReplicas;
    double vp = 0.0, vm = 0.0;
    for (int r = 0; r < kReplicas; ++r) {
      vp += (plus[r][k] - mp) * (plus[r][k] - mp);
      vm += (minus[r][k] - mm) * (minus[r][k] - mm);
    }
    const double se_p = std::sqrt(vp / (kReplicas - 1.0) / kReplicas);
    const double se_m = std::sqrt(vm / (kReplicas - 1.0) / kReplicas);
    const double se_drift = diag.node_std_error[k];
    const double tol_p = 4.0 * std::hypot(se_p, se_drift);
    const double tol_m = 4.0 * std::hypot(se_m, se_drift);
    const double dp = std::abs(drift.a_plus_nodes()[k] - mp);
    const double dm = std::abs(drift.a_minus_nodes()[k] - mm);
    const double ratio =
        std::max(tol_p > 0 ? dp / tol_p : 0.0, tol_m > 0 ? dm / tol_m : 0.0);
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst_node = k;
    }
  }
  c.require(worst_ratio < 1.0,
            "node " + std::to_string(worst_node) + " deviates by " +
                fmt(worst_ratio) + "x the 4-sigma band");
  c << "nodes=" << nodes << " worst=" << fmt(worst_ratio) << "x at node "
    << worst_node;
  return c;
}

// 9. Coupling exactness: self-coupling error identically 0 and the coupled
// finite marginal equal in law to the standalone simulator.
Check criterion_coupling_exactness(std::uint64_t seed, int workers) {
  Check c;
  const RateFunction rf = RateFunction::tanh_plus_one();
  {
    ModelParams params;
    params.n_actors = 100;
    params.h = 0.5;
    params.rate = rf;
    params.horizon = 3.0;
    params.seed = seed ^ 0x91;
    params.initial = InitialCondition::iid_uniform(1.0);
    PicardConfig pc;
    pc.sample_paths = 20000;
    pc.workers = workers;
    const DriftCurve drift =
        picard_solve(rf, params.h, params.initial, params.horizon, pc, seed ^ 0x92);
    CoupledRunOptions opt;
    opt.self_coupling = true;
    const CouplingResult res = coupled_run(params, drift, 0, opt);
    bool all_zero = true;
    for (double e : res.sup_errors) all_zero &= (e == 0.0);
    c.require(all_zero, "self-coupling produced a nonzero error");
  }
  {
    ModelParams params;
    params.n_actors = 50;
    params.h = 0.5;
    params.rate = rf;
    params.horizon = 1.0;
    params.seed = seed ^ 0x93;
    params.initial = InitialCondition::constant(1.0);
    PicardConfig pc;
    pc.sample_paths = 20000;
    pc.workers = workers;
    const DriftCurve drift =
        picard_solve(rf, params.h, params.initial, params.horizon, pc, seed ^ 0x94);
    constexpr int kReplicas = 200;
    std::vector<double> z_coupled(kReplicas), z_standalone(kReplicas);
    parallel_for(kReplicas, workers, [&](int r) {
      const CouplingResult res = coupled_run(params, drift, r);
      z_coupled[r] = static_cast<double>(res.finite_total_jumps);
      SimulateOptions opt;
      opt.grid_points = 2;
      opt.replica = r;
      const Trajectory t = simulate(params, opt);
      z_standalone[r] = static_cast<double>(t.grid.back().total_jumps);
    });
    const KsResult ks = ks_two_sample(z_coupled, z_standalone);
    c.require(ks.p_value > 0.01, "two-sample KS rejected at alpha=0.01 (D=" +
                                     fmt(ks.statistic) + ")");
    c << "ks_d=" << fmt(ks.statistic) << " p=" << fmt(ks.p_value);
  }
  return c;
}

}  // namespace

std::vector<CriterionResult> run_acceptance_suite(std::uint64_t seed,
                                                  int workers, int only) {
  struct Entry {
    int index;
    const char* name;
    double budget;
    Check (*fn)(std::uint64_t, int);
  };
  const Entry entries[] = {
      {1, "phase transition threshold", 5.0, criterion_phase_transition},
      {2, "closed-form invariant density", 1.0, criterion_density_closed_form},
      {3, "house-of-cards stationarity", 60.0, criterion_house_of_cards},
      {4, "finite-system figure behavior", 300.0, criterion_figure1},
      {5, "strong convergence exponent", 1200.0, criterion_strong_error},
      {6, "jump-count domination", 60.0, criterion_jump_dominance},
      {7, "pathwise a priori bounds", 300.0, criterion_pathwise_bounds},
      {8, "Picard-particle consistency", 600.0, criterion_picard_particle},
      {9, "coupling exactness", 120.0, criterion_coupling_exactness},
  };

  std::vector<CriterionResult> results;
  for (const Entry& entry : entries) {
    if (only != 0 && entry.index != only) continue;
    CriterionResult r;
    r.index = entry.index;
    r.name = entry.name;
    r.budget_seconds = entry.budget;
    const auto start = std::chrono::steady_clock::now();
    try {
      Check c = entry.fn(seed, workers);
      r.passed = c.ok;
      r.detail = c.detail.str();
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              start)
                    .count();
    if (r.seconds > r.budget_seconds) {
      r.passed = false;
      r.detail += " [runtime budget exceeded]";
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace opdyn
