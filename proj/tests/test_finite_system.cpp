#include <doctest.h>

#include <cmath>
#include <vector>

#include "opdyn/finite_system.hpp"
#include "opdyn/stats.hpp"

using namespace opdyn;

namespace {
ModelParams tanh_params(int n, double h, double horizon, std::uint64_t seed,
                        InitialCondition init) {
  ModelParams p;
  p.n_actors = n;
  p.h = h;
  p.rate = RateFunction::tanh_plus_one();
  p.horizon = horizon;
  p.seed = seed;
  p.initial = std::move(init);
  return p;
}
}  // namespace

TEST_CASE("apply_opinion implements the reset map") {
  {
    SystemState s({0.4, -0.2});
    s.apply_opinion(0, +1, 1.0);
    CHECK(s.pressure(0) == 0.0);
    CHECK(s.pressure(1) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(s.total_jumps() == 1);
    CHECK(s.jump_counts()[0] == 1);
  }
  {
    SystemState s({0.0, 0.0, 0.0});
    s.apply_opinion(1, -1, 0.9);
    CHECK(s.pressure(1) == 0.0);
    CHECK(s.pressure(0) == doctest::Approx(-0.3).epsilon(1e-15));
    CHECK(s.pressure(2) == doctest::Approx(-0.3).epsilon(1e-15));
  }
}

TEST_CASE("acting actor is reset to exactly zero, always") {
  PhiloxRng rng(21, 0);
  SystemState s({0.3, -1.2, 0.7, 0.05});
  for (int i = 0; i < 200; ++i) {
    const int actor = static_cast<int>(rng.uniform_below(4));
    const int opinion = (rng.next_u32() & 1u) ? +1 : -1;
    s.apply_opinion(actor, opinion, 1.3);
    REQUIRE(s.pressure(actor) == 0.0);
  }
  CHECK(s.total_jumps() == 200);
}

TEST_CASE("total_rate closed forms") {
  const RateFunction tanh1 = RateFunction::tanh_plus_one();
  const RateFunction expf = RateFunction::exponential();
  std::vector<double> pressures(1000);
  for (std::size_t i = 0; i < pressures.size(); ++i)
    pressures[i] = std::sin(0.1 * i);
  CHECK(total_rate(SystemState(pressures), tanh1) == doctest::Approx(2000.0));
  CHECK(total_rate(SystemState({0.0, 0.0}), expf) == doctest::Approx(4.0));
  CHECK(total_rate(SystemState({1.0, -1.0}), expf) ==
        doctest::Approx(4.0 * std::cosh(1.0)).epsilon(1e-14));
}

TEST_CASE("waiting times are exponential with the total rate") {
  // Two tanh actors: constant total rate 4.
  PhiloxRng rng(31, 1);
  SystemState s({0.0, 0.0});
  const RateFunction rf = RateFunction::tanh_plus_one();
  const int n = 100000;
  double sum = 0.0;
  double prev = 0.0;
  for (int i = 0; i < n; ++i) {
    step(s, rf, 1.0, rng);
    sum += s.time() - prev;
    prev = s.time();
  }
  const double mean = sum / n;
  const double se = 0.25 / std::sqrt(double(n));
  CHECK(std::abs(mean - 0.25) < 3.0 * se);
}

TEST_CASE("event selection is uniform from the symmetric state") {
  PhiloxRng rng(32, 2);
  const RateFunction rf = RateFunction::tanh_plus_one();
  int counts[2][2] = {{0, 0}, {0, 0}};
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    SystemState s({0.0, 0.0});
    const auto ev = step(s, rf, 1.0, rng);
    REQUIRE(ev.has_value());
    ++counts[ev->actor][(ev->opinion + 1) / 2];
  }
  const double expected = n / 4.0;
  const double band = 3.0 * std::sqrt(expected * 0.75);
  for (int a = 0; a < 2; ++a)
    for (int o = 0; o < 2; ++o)
      CHECK(std::abs(counts[a][o] - expected) < band);
}

TEST_CASE("simulate is deterministic and events replay bit for bit") {
  const ModelParams params =
      tanh_params(50, 0.8, 2.0, 777, InitialCondition::iid_uniform(1.0));
  SimulateOptions opt;
  opt.grid_points = 21;
  opt.record_events = true;
  const Trajectory a = simulate(params, opt);
  const Trajectory b = simulate(params, opt);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    REQUIRE(a.events[i].time == b.events[i].time);
    REQUIRE(a.events[i].actor == b.events[i].actor);
    REQUIRE(a.events[i].opinion == b.events[i].opinion);
  }
  // Different replica index gives a different realization.
  SimulateOptions other = opt;
  other.replica = 1;
  const Trajectory c = simulate(params, other);
  CHECK(c.events.size() != a.events.size());
}

TEST_CASE("grid samples are left limits and start from the initial state") {
  const ModelParams params =
      tanh_params(10, 0.5, 1.0, 5, InitialCondition::constant(0.7));
  SimulateOptions opt;
  opt.grid_points = 11;
  const Trajectory t = simulate(params, opt);
  REQUIRE(t.grid.size() == 11);
  CHECK(t.grid.front().t == 0.0);
  CHECK(t.grid.front().mean_pressure == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(t.grid.front().total_jumps == 0);
  CHECK(t.grid.back().t == doctest::Approx(1.0));
  for (std::size_t i = 1; i < t.grid.size(); ++i)
    REQUIRE(t.grid[i].total_jumps >= t.grid[i - 1].total_jumps);
}

TEST_CASE("pathwise bound holds along simulated trajectories") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const ModelParams params =
        tanh_params(100, 2.0, 3.0, seed, InitialCondition::iid_two_point(1.0));
    const Trajectory t = simulate(params, {});
    REQUIRE(t.bound_violation <= 0.0);
  }
}

TEST_CASE("event counts are Poisson for the constant-rate family") {
  // Total rate 2N exactly, so the count over [0,T] is Poisson(2NT) = 40.
  const int replicas = 400;
  std::vector<long long> counts(replicas);
  for (int r = 0; r < replicas; ++r) {
    ModelParams params =
        tanh_params(20, 1.0, 1.0, 4242, InitialCondition::iid_uniform(1.0));
    SimulateOptions opt;
    opt.grid_points = 2;
    opt.replica = r;
    counts[r] =
        static_cast<long long>(simulate(params, opt).grid.back().total_jumps);
  }
  CHECK(poisson_gof(counts, 40.0).p_value > 0.01);
}

TEST_CASE("jump counts are exchangeable between first and last actor") {
  const int replicas = 300;
  std::vector<double> first(replicas), last(replicas);
  for (int r = 0; r < replicas; ++r) {
    ModelParams params =
        tanh_params(10, 1.0, 2.0, 909, InitialCondition::iid_uniform(1.0));
    SimulateOptions opt;
    opt.grid_points = 2;
    opt.replica = r;
    const Trajectory t = simulate(params, opt);
    first[r] = static_cast<double>(t.final_jump_counts.front());
    last[r] = static_cast<double>(t.final_jump_counts.back());
  }
  CHECK(ks_two_sample(first, last).p_value > 0.01);
}

TEST_CASE("jump dominance report on the reference configuration") {
  const ModelParams params =
      tanh_params(50, 0.5, 1.0, 1234, InitialCondition::iid_uniform(1.0));
  const DominanceReport rep = check_jump_dominance(params, 500);
  CHECK(rep.pass());
  CHECK(rep.mean_bound == doctest::Approx(5.0));
  CHECK(rep.rows.size() == 9);
}

TEST_CASE("jump dominance degenerates gracefully at T = 0") {
  ModelParams params =
      tanh_params(50, 0.5, 1.0, 1, InitialCondition::constant(0.0));
  params.horizon = 0.0;
  const DominanceReport rep = check_jump_dominance(params, 100);
  CHECK(rep.degenerate);
  CHECK(rep.pass());
}

TEST_CASE("initial-free bound: vacuous for bounded families, finite otherwise") {
  CHECK_FALSE(initial_free_bound_diagnostic(RateFunction::tanh_plus_one(), 3.0,
                                            1.0, 0.5)
                  .has_value());
  const RateFunction expf = RateFunction::exponential();
  const double h = 0.3;
  const auto bound = initial_free_bound_diagnostic(expf, 3.0, 1.0, h);
  REQUIRE(bound.has_value());
  // Frozen quadrature oracle for E[(M>)^{-1}(E)] at rate 2:
  // int acosh(max(y,2)/2) * 2 exp(-2y) dy = 0.011159676085853024.
  const double expect =
      0.011159676085853024 + h + h * 2.0 * expf.m_less(2.0 * h);
  CHECK(*bound == doctest::Approx(expect).epsilon(1e-7));

  // The bound blows up as the window shrinks.
  const auto tiny = initial_free_bound_diagnostic(expf, 3.0, 3.0 - 1e-6, h);
  REQUIRE(tiny.has_value());
  CHECK(*tiny > *bound);
}

TEST_CASE("initial-free bound dominates the Monte Carlo mean pressure") {
  const RateFunction expf = RateFunction::exponential();
  const double h = 0.3, t = 3.0, s = 1.0;
  const double bound = *initial_free_bound_diagnostic(expf, t, s, h);
  const int replicas = 60;
  std::vector<double> means(replicas);
  for (int r = 0; r < replicas; ++r) {
    ModelParams params;
    params.n_actors = 200;
    params.h = h;
    params.rate = expf;
    params.horizon = t;
    params.seed = 6060;
    params.initial = InitialCondition::iid_uniform(1.0);
    SimulateOptions opt;
    opt.grid_points = 2;
    opt.record_actor_pressures = true;
    opt.replica = r;
    const Trajectory traj = simulate(params, opt);
    double mean_abs = 0.0;
    for (double u : traj.actor_rows.back()) mean_abs += std::abs(u);
    means[r] = mean_abs / params.n_actors;
  }
  const double mc = mean_of(means);
  const double se = sample_sd(means) / std::sqrt(double(replicas));
  CHECK(mc <= bound + 3.0 * se);
}

TEST_CASE("model validation") {
  ModelParams p = tanh_params(1, 1.0, 1.0, 0, InitialCondition::constant(0.0));
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.n_actors = 2;
  p.h = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.h = 1.0;
  p.horizon = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_THROWS_AS(InitialCondition::custom({}), std::invalid_argument);
  // Custom list length must match N.
  ModelParams q = tanh_params(3, 1.0, 1.0, 0,
                              InitialCondition::custom({0.1, -0.2}));
  CHECK_THROWS_AS(simulate(q, {}), std::invalid_argument);
}
