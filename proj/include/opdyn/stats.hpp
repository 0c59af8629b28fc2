#ifndef OPDYN_STATS_HPP
#define OPDYN_STATS_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace opdyn {

// Regularized incomplete gamma functions P(a,x) and Q(a,x) = 1 - P(a,x)
// (series for x < a+1, continued fraction otherwise).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// P(Poisson(lambda) > k).
double poisson_sf(long long k, double lambda);
double poisson_log_pmf(long long k, double lambda);

// P(ChiSquare(dof) > x).
double chi_square_sf(double x, double dof);

// Kolmogorov limiting tail Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_sf(double lambda);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov with the asymptotic p-value; conservative in
// the presence of ties (integer-valued samples).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// One-sample KS statistic of an ascending sample against a cdf.
double ks_statistic_sorted(const std::vector<double>& sorted,
                           const std::function<double(double)>& cdf);
double ks_statistic_sorted(const std::vector<double>& sorted,
                           const std::vector<double>& cdf_values);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct ChiSquareGof {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  int bins = 0;
};

// Chi-square goodness of fit of integer samples against Poisson(lambda),
// merging tail bins so every expected count is at least 5.
ChiSquareGof poisson_gof(const std::vector<long long>& sample, double lambda);

double mean_of(std::span<const double> xs);
double sample_sd(std::span<const double> xs);

}  // namespace opdyn

#endif  // OPDYN_STATS_HPP
