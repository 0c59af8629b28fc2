#include <doctest.h>

#include <cmath>
#include <sstream>

#include "opdyn/limit_sde.hpp"
#include "opdyn/stats.hpp"

using namespace opdyn;

TEST_CASE("apriori_gamma reference values") {
  const RateFunction rf = RateFunction::tanh_plus_one();
  CHECK(apriori_gamma(1.0, 3.0, 2.0, rf) == doctest::Approx(26.0));
  CHECK(apriori_gamma(1.0, 0.0, 2.0, rf) == doctest::Approx(2.0));
}

TEST_CASE("drift curve interpolation and cumulative integral") {
  DriftCurve curve(2.0, 4);  // dt = 0.5
  // a_plus - a_minus = t (linear), via a_plus = 1 + t, a_minus = 1.
  for (int k = 0; k <= 4; ++k) curve.set_node(k, 1.0 + 0.5 * k, 1.0);
  curve.finalize();
  CHECK(curve.difference(0.75) == doctest::Approx(0.75).epsilon(1e-14));
  // int_0^t s ds = t^2/2, exact for the piecewise-quadratic cumulative.
  for (double t : {0.2, 0.5, 0.77, 1.3, 2.0}) {
    CHECK(curve.cumulative(t) == doctest::Approx(t * t / 2.0).epsilon(1e-14));
  }
  CHECK(curve.sign_change_times().empty());
}

TEST_CASE("drift curve sign changes are located") {
  DriftCurve curve(1.0, 2);  // nodes at 0, 0.5, 1
  curve.set_node(0, 2.0, 1.0);   // d = +1
  curve.set_node(1, 1.0, 2.0);   // d = -1, crossing at 0.25
  curve.set_node(2, 1.0, 1.0);   // d = 0 at the end node
  curve.finalize();
  const auto crossings = curve.sign_change_times();
  REQUIRE(crossings.size() == 1);
  CHECK(crossings[0] == doctest::Approx(0.25));
}

TEST_CASE("drift curve csv round trip is bit exact") {
  DriftCurve curve(1.5, 3);
  curve.set_node(0, 1.1234567890123456, 0.9876543210987654);
  curve.set_node(1, 0.3333333333333333, 1.0 / 7.0);
  curve.set_node(2, 2.0, 0.1);
  curve.set_node(3, 1.7182818284590452, 0.5772156649015329);
  curve.finalize();
  std::stringstream io;
  curve.write_csv(io);
  const DriftCurve back = DriftCurve::read_csv(io);
  REQUIRE(back.nodes() == curve.nodes());
  for (int k = 0; k < curve.nodes(); ++k) {
    REQUIRE(back.a_plus_nodes()[k] == curve.a_plus_nodes()[k]);
    REQUIRE(back.a_minus_nodes()[k] == curve.a_minus_nodes()[k]);
  }
}

TEST_CASE("limit path is trapped at zero once the drift difference vanishes") {
  const RateFunction rf = RateFunction::tanh_plus_one();
  DriftCurve curve(4.0, 8);
  for (int k = 0; k <= 8; ++k) curve.set_node(k, 1.0, 1.0);  // zero difference
  curve.finalize();
  PhiloxRng rng(404, 0);
  const LimitPath path = sample_limit_path(rf, 1.0, curve, 0.9, rng, 4.0, 10.0);
  REQUIRE(!path.jump_times.empty());
  CHECK(path.value_at(path.jump_times.front() - 1e-12) ==
        doctest::Approx(0.9));
  for (double t = path.jump_times.front(); t <= 4.0; t += 0.01)
    REQUIRE(path.value_at(t) == 0.0);
}

TEST_CASE("limit path follows a linear flow between jumps") {
  const RateFunction rf = RateFunction::tanh_plus_one();
  const double gamma = 0.8, h = 1.5;
  DriftCurve curve(3.0, 6);
  for (int k = 0; k <= 6; ++k) curve.set_node(k, 1.0 + gamma, 1.0);
  curve.finalize();
  PhiloxRng rng(405, 0);
  const LimitPath path =
      sample_limit_path(rf, h, curve, 0.2, rng, 3.0, 20.0);
  // Between consecutive jumps the path is u_reset + h*gamma*(t - t_reset).
  double t_reset = 0.0;
  double u_reset = 0.2;
  for (double jump : path.jump_times) {
    const double mid = 0.5 * (t_reset + jump);
    CHECK(path.value_at(mid) ==
          doctest::Approx(u_reset + h * gamma * (mid - t_reset)).epsilon(1e-12));
    t_reset = jump;
    u_reset = 0.0;
  }
}

TEST_CASE("sampled limit paths respect the a priori sup bound") {
  const RateFunction rf = RateFunction::tanh_plus_one();
  const double h = 2.0, horizon = 2.0, support = 1.0;
  PicardConfig pc;
  pc.sample_paths = 5000;
  const DriftCurve drift = picard_solve(
      rf, h, InitialCondition::iid_two_point(support), horizon, pc, 99);
  const double gamma_t = apriori_gamma(support, horizon, h, rf);
  PhiloxRng rng(406, 0);
  for (int p = 0; p < 1000; ++p) {
    const double u0 = (rng.next_u32() & 1u) ? support : -support;
    const LimitPath path =
        sample_limit_path(rf, h, drift, u0, rng, horizon, gamma_t);
    REQUIRE(path.recorded_sup_abs <= gamma_t + 1e-9);
  }
}

TEST_CASE("picard drift curves are symmetric for a symmetric initial law") {
  const RateFunction rf = RateFunction::tanh_plus_one();
  PicardConfig pc;
  pc.sample_paths = 40000;
  PicardDiagnostics diag;
  const DriftCurve drift = picard_solve(
      rf, 1.0, InitialCondition::iid_two_point(1.0), 2.0, pc, 3131, &diag);
  const double band = 4.0 * diag.max_curve_std_error;
  for (int k = 0; k < drift.nodes(); ++k) {
    REQUIRE(std::abs(drift.a_plus_nodes()[k] - drift.a_minus_nodes()[k]) <
            band);
  }
}

TEST_CASE("picard curves satisfy a_plus + a_minus = 2 for the tanh family") {
  const RateFunction rf = RateFunction::tanh_plus_one();
  PicardConfig pc;
  pc.sample_paths = 20000;
  const DriftCurve drift = picard_solve(
      rf, 2.0, InitialCondition::constant(1.0), 1.0, pc, 3132);
  for (int k = 0; k < drift.nodes(); ++k) {
    REQUIRE(drift.a_plus_nodes()[k] + drift.a_minus_nodes()[k] ==
            doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("picard initial node equals phi(0) exactly for a zero start") {
  const RateFunction rf = RateFunction::exponential();
  PicardConfig pc;
  pc.sample_paths = 2000;
  pc.cells_per_unit_time = 64;
  const DriftCurve drift =
      picard_solve(rf, 0.4, InitialCondition::constant(0.0), 0.5, pc, 3133);
  CHECK(drift.a_plus_nodes()[0] == 1.0);
  CHECK(drift.a_minus_nodes()[0] == 1.0);
}

TEST_CASE("picard residuals decay and the jump-size integral obeys its bound") {
  const RateFunction rf = RateFunction::tanh_plus_one();
  PicardConfig pc;
  pc.sample_paths = 20000;
  pc.tolerance = 1e-4;
  pc.max_iterations = 60;
  PicardDiagnostics diag;
  picard_solve(rf, 0.5, InitialCondition::constant(1.0), 1.0, pc, 3134, &diag);
  REQUIRE(diag.window_residuals.size() >= 1);
  // Common random numbers make the contraction visible: successive residuals
  // shrink by at least the theoretical factor (capped at 0.9) for at least
  // 80% of the iterations in each window.
  const double c_star =
      contraction_report(rf, 0.5, 1.0, 1.0).c_at_t_star;
  const double ratio_bound = std::max(c_star, 0.9);
  for (const auto& residuals : diag.window_residuals) {
    int contracting = 0, pairs = 0;
    for (std::size_t i = 2; i < residuals.size(); ++i) {
      ++pairs;
      if (residuals[i] <= ratio_bound * residuals[i - 1]) ++contracting;
      REQUIRE(residuals[i] < residuals[1] + 1e-12);
    }
    if (pairs > 0) REQUIRE(contracting * 10 >= pairs * 8);
  }
  CHECK(diag.jump_size_integral <= diag.jump_size_integral_bound);
  CHECK(diag.clamp_hits == 0);
  CHECK(diag.pathwise_sup <= diag.truncation_radius + 1e-9);
}

TEST_CASE("picard reports non-convergence with residual history") {
  const RateFunction rf = RateFunction::tanh_plus_one();
  PicardConfig pc;
  pc.sample_paths = 1000;
  pc.cells_per_unit_time = 16;
  pc.tolerance = 1e-14;  // unreachable
  pc.max_iterations = 2;
  try {
    picard_solve(rf, 1.0, InitialCondition::constant(1.0), 0.5, pc, 3135);
    FAIL("expected picard_convergence_error");
  } catch (const picard_convergence_error& e) {
    CHECK(!e.residual_history.empty());
  }
}

TEST_CASE("contraction report") {
  const RateFunction rf = RateFunction::tanh_plus_one();
  SUBCASE("vanishing interaction gives the whole horizon") {
    const ContractionReport r = contraction_report(rf, 1e-9, 1.0, 5.0);
    CHECK(r.t_star == doctest::Approx(5.0));
    CHECK(r.c_at_t_star < 1e-3);  // proportional to h
    CHECK(contraction_report(rf, 1e-12, 1.0, 5.0).c_at_t_star <
          r.c_at_t_star);
  }
  SUBCASE("reference window for h=2, L=1, T=1") {
    const ContractionReport r = contraction_report(rf, 2.0, 1.0, 1.0);
    CHECK(r.t_star == doctest::Approx(0.07040210079).epsilon(1e-6));
    CHECK(r.c_at_t_star <= 1.0);
    CHECK(r.t_star > 0.0);
    // The solver converges comfortably within one such window.
    PicardConfig pc;
    pc.sample_paths = 5000;
    pc.max_iterations = 50;
    CHECK_NOTHROW(picard_solve(rf, 2.0, InitialCondition::constant(1.0),
                               r.t_star, pc, 3136));
  }
}

TEST_CASE("picard config is validated") {
  PicardConfig pc;
  pc.sample_paths = 10;  // below the documented minimum
  CHECK_THROWS_AS(picard_solve(RateFunction::tanh_plus_one(), 1.0,
                               InitialCondition::constant(0.0), 1.0, pc, 1),
                  std::invalid_argument);
}
