#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "opdyn/quadrature.hpp"
#include "opdyn/rng.hpp"
#include "opdyn/stats.hpp"

using namespace opdyn;

TEST_CASE("regularized gamma against closed forms") {
  // P(1,x) = 1 - exp(-x); Q(1/2,x) = erfc(sqrt(x)).
  for (double x : {0.1, 0.5, 1.0, 3.0, 10.0}) {
    CHECK(regularized_gamma_p(1.0, x) ==
          doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-13));
    CHECK(regularized_gamma_q(0.5, x) ==
          doctest::Approx(std::erfc(std::sqrt(x))).epsilon(1e-12));
    CHECK(regularized_gamma_p(3.7, x) + regularized_gamma_q(3.7, x) ==
          doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("poisson survival equals the direct sum") {
  const double lambda = 3.5;
  for (long long k = 0; k <= 12; ++k) {
    double cdf = 0.0;
    for (long long j = 0; j <= k; ++j)
      cdf += std::exp(poisson_log_pmf(j, lambda));
    CHECK(poisson_sf(k, lambda) == doctest::Approx(1.0 - cdf).epsilon(1e-11));
  }
  CHECK(poisson_sf(-1, lambda) == 1.0);
}

TEST_CASE("chi-square tail for two degrees of freedom") {
  for (double x : {0.5, 2.0, 9.21}) {
    CHECK(chi_square_sf(x, 2) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-12));
  }
}

TEST_CASE("kolmogorov tail at the standard critical points") {
  CHECK(kolmogorov_sf(1.627623612) == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(kolmogorov_sf(1.358098639) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(kolmogorov_sf(0.0) == 1.0);
}

TEST_CASE("two-sample KS separates shifted samples and accepts equal ones") {
  PhiloxRng rng(11, 0);
  std::vector<double> a(500), b(500), c(500);
  for (int i = 0; i < 500; ++i) {
    a[i] = rng.uniform01();
    b[i] = rng.uniform01();
    c[i] = rng.uniform01() + 0.4;
  }
  CHECK(ks_two_sample(a, b).p_value > 0.01);
  CHECK(ks_two_sample(a, c).p_value < 1e-6);
  CHECK(ks_two_sample(a, a).statistic == 0.0);
}

TEST_CASE("one-sample KS statistic on a tiny hand case") {
  // Sample {0.5} against U(0,1): D = max(|1-0.5|, |0.5-0|) = 0.5.
  const std::vector<double> xs{0.5};
  CHECK(ks_statistic_sorted(xs, [](double x) { return x; }) ==
        doctest::Approx(0.5));
}

TEST_CASE("line fit recovers exact lines") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> y{0.5, 1.5, 2.5, 3.5};
  const LineFit fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(fit.intercept == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-13));
  CHECK_THROWS_AS(fit_line(std::vector<double>{1.0}, std::vector<double>{1.0}),
                  std::invalid_argument);
}

namespace {
std::vector<long long> poisson_counts(double lambda, int replicas,
                                      std::uint64_t seed) {
  // Exact Poisson draws: count unit-rate exponential arrivals before lambda.
  std::vector<long long> out(replicas);
  for (int r = 0; r < replicas; ++r) {
    PhiloxRng rng(seed, stream_id(StreamPurpose::selftest, r));
    double t = 0.0;
    long long k = -1;
    while (t < lambda) {
      t += rng.exponential(1.0);
      ++k;
    }
    out[r] = k;
  }
  return out;
}
}  // namespace

TEST_CASE("poisson goodness of fit accepts the true rate and rejects a wrong one") {
  const auto counts = poisson_counts(40.0, 400, 99);
  CHECK(poisson_gof(counts, 40.0).p_value > 0.01);
  CHECK(poisson_gof(counts, 55.0).p_value < 1e-4);
}

TEST_CASE("adaptive quadrature on smooth and improper integrals") {
  const QuadResult poly =
      integrate([](double x) { return x * x; }, 0.0, 1.0, 1e-14);
  CHECK(poly.value == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(poly.converged);

  const QuadResult osc =
      integrate([](double x) { return std::sin(10.0 * x); }, 0.0, 3.0, 1e-12);
  CHECK(osc.value ==
        doctest::Approx((1.0 - std::cos(30.0)) / 10.0).epsilon(1e-11));

  const ImproperResult tail = integrate_to_infinity(
      [](double x) { return std::exp(-x); }, 0.0, 1e-10);
  CHECK(tail.converged);
  CHECK(tail.value == doctest::Approx(1.0).epsilon(1e-9));

  const ImproperResult divergent = integrate_to_infinity(
      [](double x) { return 1.0 / (1.0 + x); }, 0.0, 1e-10, 1.0, 30);
  CHECK_FALSE(divergent.converged);
}

TEST_CASE("sample moments") {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  CHECK(mean_of(xs) == doctest::Approx(2.5));
  CHECK(sample_sd(xs) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-13));
}
