#include <doctest.h>

#include <cmath>

#include "opdyn/rates.hpp"
#include "opdyn/rng.hpp"

using namespace opdyn;

namespace {
RateFunction affine_tanh(double b = 1.0) {
  return RateFunction::affine_odd(
      [](double x) { return std::tanh(x); },
      [](double x) {
        const double c = std::cosh(x);
        return 1.0 / (c * c);
      },
      b);
}
}  // namespace

TEST_CASE("phi at reference points") {
  const RateFunction tanh1 = RateFunction::tanh_plus_one();
  const RateFunction expf = RateFunction::exponential();
  CHECK(tanh1.phi(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(expf.phi(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  for (double x : {0.3, 1.7, 10.0}) {
    CHECK(tanh1.phi(x) + tanh1.phi(-x) == doctest::Approx(2.0).epsilon(1e-15));
  }
}

TEST_CASE("phi is nonnegative and phi_pair matches phi (1000 random points)") {
  const RateFunction families[] = {RateFunction::tanh_plus_one(),
                                   RateFunction::exponential(), affine_tanh()};
  PhiloxRng rng(17, 0);
  for (const auto& rf : families) {
    for (int i = 0; i < 1000; ++i) {
      const double x = 20.0 * (rng.uniform01() - 0.5);
      const auto [plus, minus] = rf.phi_pair(x);
      REQUIRE(plus >= 0.0);
      REQUIRE(minus >= 0.0);
      REQUIRE(rf.phi(x) == doctest::Approx(plus).epsilon(1e-14));
      REQUIRE(rf.phi(-x) == doctest::Approx(minus).epsilon(1e-14));
      REQUIRE(rf.big_phi(std::abs(x)) ==
              doctest::Approx(plus + minus).epsilon(1e-14));
    }
  }
}

TEST_CASE("big_phi reference values") {
  CHECK(RateFunction::tanh_plus_one().big_phi(123.4) ==
        doctest::Approx(2.0).epsilon(1e-13));
  CHECK(RateFunction::exponential().big_phi(0.0) == doctest::Approx(2.0));
  CHECK(RateFunction::exponential().big_phi(1.0) ==
        doctest::Approx(3.0861612696304876).epsilon(1e-15));
}

TEST_CASE("tanh_plus_one big_phi is constant to 1e-12") {
  const RateFunction rf = RateFunction::tanh_plus_one();
  for (double r = 0.0; r < 40.0; r += 0.37) {
    REQUIRE(std::abs(rf.big_phi(r) - 2.0) < 1e-12);
  }
}

TEST_CASE("m_less and m_greater closed forms") {
  const RateFunction tanh1 = RateFunction::tanh_plus_one();
  const RateFunction expf = RateFunction::exponential();
  const double h = 0.7;
  CHECK(tanh1.m_less(4.0 * h) == doctest::Approx(2.0));
  CHECK(tanh1.m_less(0.0) == doctest::Approx(2.0 * tanh1.phi(0.0)));
  CHECK(expf.m_less(0.0) == doctest::Approx(2.0 * expf.phi(0.0)));
  CHECK(expf.m_greater(3.0) ==
        doctest::Approx(20.135323991555532).epsilon(1e-15));
  CHECK(tanh1.m_greater(3.0) == doctest::Approx(2.0));
}

TEST_CASE("m_less and m_greater are non-decreasing on sampled grids") {
  const RateFunction families[] = {RateFunction::tanh_plus_one(),
                                   RateFunction::exponential(), affine_tanh()};
  for (const auto& rf : families) {
    double prev_less = rf.m_less(0.0);
    double prev_greater = rf.m_greater(0.0);
    for (double l = 0.25; l <= 5.0; l += 0.25) {
      const double ml = rf.m_less(l);
      const double mg = rf.m_greater(l);
      REQUIRE(ml >= prev_less - 1e-9);
      REQUIRE(mg >= prev_greater - 1e-9);
      prev_less = ml;
      prev_greater = mg;
    }
  }
}

TEST_CASE("generalized inverse of m_greater") {
  const RateFunction expf = RateFunction::exponential();
  CHECK(expf.m_greater_inverse(2.0) == doctest::Approx(0.0));
  CHECK(expf.m_greater_inverse(20.135323991555532).value() ==
        doctest::Approx(3.0).epsilon(1e-12));
  CHECK_FALSE(RateFunction::tanh_plus_one().m_greater_inverse(3.0).has_value());

  // Contracts: M>(inv(y)) >= y - tol and inv(M>(l)) <= l.
  for (double y : {2.5, 4.0, 9.0, 30.0}) {
    const double r = expf.m_greater_inverse(y).value();
    REQUIRE(expf.m_greater(r) >= y - 1e-9);
  }
  for (double l : {0.0, 0.5, 1.5, 4.0}) {
    REQUIRE(expf.m_greater_inverse(expf.m_greater(l)).value() <= l + 1e-12);
  }
}

TEST_CASE("lipschitz bounds") {
  CHECK(RateFunction::tanh_plus_one().lipschitz_bound(5.0) == doctest::Approx(1.0));
  CHECK(RateFunction::exponential().lipschitz_bound(2.0) ==
        doctest::Approx(7.3890560989306502).epsilon(1e-15));
  CHECK(affine_tanh().lipschitz_bound(3.0) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("affine_odd with f = tanh matches the builtin to 1e-12") {
  const RateFunction builtin = RateFunction::tanh_plus_one();
  const RateFunction affine = affine_tanh();
  for (double x = -8.0; x <= 8.0; x += 0.37) {
    REQUIRE(std::abs(builtin.phi(x) - affine.phi(x)) < 1e-12);
  }
  CHECK(std::abs(builtin.m_less(3.0) - affine.m_less(3.0)) < 1e-9);
  CHECK(std::abs(builtin.m_greater(3.0) - affine.m_greater(3.0)) < 1e-9);
  CHECK(std::abs(builtin.lipschitz_bound(2.0) - affine.lipschitz_bound(2.0)) <
        1e-9);
}

TEST_CASE("exponential overflow guard") {
  const RateFunction expf = RateFunction::exponential();
  CHECK_THROWS_AS(expf.phi(800.0), rate_overflow_error);
  CHECK_THROWS_AS(expf.phi(-800.0), rate_overflow_error);
  CHECK_NOTHROW(expf.phi(600.0));
}

TEST_CASE("affine_odd construction rejects invalid closures") {
  const auto sech2 = [](double x) {
    const double c = std::cosh(x);
    return 1.0 / (c * c);
  };
  // Not odd.
  CHECK_THROWS_AS(RateFunction::affine_odd(
                      [](double x) { return x * x; },
                      [](double x) { return 2.0 * x; }, 1.0),
                  std::invalid_argument);
  // Exceeds the offset bound.
  CHECK_THROWS_AS(RateFunction::affine_odd(
                      [](double x) { return std::tanh(x); }, sech2, 0.5),
                  std::invalid_argument);
  // Derivative rises again around x ~ 2 (sum of shifted bumps), so it is not
  // decreasing on the positive axis.
  CHECK_THROWS_AS(
      RateFunction::affine_odd(
          [](double x) {
            return (std::tanh(x) + std::tanh(x - 2.0) + std::tanh(x + 2.0)) / 3.0;
          },
          [sech2](double x) {
            return (sech2(x) + sech2(x - 2.0) + sech2(x + 2.0)) / 3.0;
          },
          1.0),
      std::invalid_argument);
  CHECK_THROWS_AS(affine_tanh(-1.0), std::invalid_argument);
}
