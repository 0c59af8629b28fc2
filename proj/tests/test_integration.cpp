#include <doctest.h>

#include <cmath>

#include "opdyn/invariant.hpp"
#include "opdyn/limit_sde.hpp"

using namespace opdyn;

// End-to-end consistency across the solver stack: starting the limit
// equation in the positive basin, the long-horizon drift difference
// a_plus - a_minus must settle at the fixed-point root gamma*, i.e. the
// stationary drift h*gamma* matches h*(a_plus - a_minus) at the horizon.
TEST_CASE("long-horizon picard drift settles at the invariant-measure root") {
  const RateFunction rf = RateFunction::tanh_plus_one();
  const double h = 2.0;
  const double gamma_star = solve_gamma(rf, h).positive_root();
  REQUIRE(gamma_star > 0.0);

  PicardConfig pc;
  pc.sample_paths = 20000;
  pc.cells_per_unit_time = 128;
  pc.max_iterations = 80;
  PicardDiagnostics diag;
  const DriftCurve drift = picard_solve(rf, h, InitialCondition::constant(1.0),
                                        15.0, pc, 515151, &diag);

  const double drift_difference =
      drift.a_plus_nodes().back() - drift.a_minus_nodes().back();
  // Combined tolerance: 4x the Monte Carlo error of both curve estimates
  // plus the stopping tolerance of the iteration.
  const double tol = 8.0 * diag.max_curve_std_error + diag.tolerance_used;
  CHECK(std::abs(drift_difference - gamma_star) < tol);

  // The plateau is two-sided: the mirrored start lands on the negative root.
  const DriftCurve mirrored = picard_solve(
      rf, h, InitialCondition::constant(-1.0), 15.0, pc, 515152);
  const double mirrored_difference =
      mirrored.a_plus_nodes().back() - mirrored.a_minus_nodes().back();
  CHECK(std::abs(mirrored_difference + gamma_star) < tol);
}
