#include "opdyn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace opdyn {

namespace {

// Series representation of P(a,x), valid and fast for x < a+1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a,x), x >= a+1.
double gamma_q_cf(double a, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double frac = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    frac *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return frac * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double poisson_sf(long long k, double lambda) {
  if (k < 0) return 1.0;
  // P(X > k) = P(k+1, lambda).
  return regularized_gamma_p(static_cast<double>(k) + 1.0, lambda);
}

double poisson_log_pmf(long long k, double lambda) {
  if (k < 0) return -std::numeric_limits<double>::infinity();
  return static_cast<double>(k) * std::log(lambda) - lambda -
         std::lgamma(static_cast<double>(k) + 1.0);
}

double chi_square_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(0.5 * dof, 0.5 * x);
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double sqrt_ne = std::sqrt(ne);
  KsResult r;
  r.statistic = d;
  r.p_value = kolmogorov_sf((sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d);
  return r;
}

double ks_statistic_sorted(const std::vector<double>& sorted,
                           const std::function<double(double)>& cdf) {
  std::vector<double> values(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) values[i] = cdf(sorted[i]);
  return ks_statistic_sorted(sorted, values);
}

double ks_statistic_sorted(const std::vector<double>& sorted,
                           const std::vector<double>& cdf_values) {
  if (sorted.empty() || sorted.size() != cdf_values.size())
    throw std::invalid_argument("ks_statistic: bad sample");
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf_values[i];
    d = std::max(d, std::abs((static_cast<double>(i) + 1.0) / n - f));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  return d;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = (syy == 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

ChiSquareGof poisson_gof(const std::vector<long long>& sample, double lambda) {
  if (sample.size() < 20)
    throw std::invalid_argument("poisson_gof: sample too small");
  const long long lo = *std::min_element(sample.begin(), sample.end());
  const long long hi = *std::max_element(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());

  // Candidate bins [lo..hi] plus open tails, then merge until expected >= 5.
  struct Bin {
    long long lo, hi;  // inclusive; lo==LLONG_MIN / hi==LLONG_MAX for tails
    double expected = 0.0;
    double observed = 0.0;
  };
  std::vector<Bin> bins;
  constexpr long long kNegInf = std::numeric_limits<long long>::min();
  constexpr long long kPosInf = std::numeric_limits<long long>::max();
  bins.push_back({kNegInf, lo - 1, n * (1.0 - poisson_sf(lo - 1, lambda)), 0.0});
  for (long long k = lo; k <= hi; ++k) {
    bins.push_back({k, k, n * std::exp(poisson_log_pmf(k, lambda)), 0.0});
  }
  bins.push_back({hi + 1, kPosInf, n * poisson_sf(hi, lambda), 0.0});

  for (long long v : sample) {
    for (auto& bin : bins) {
      if (v >= bin.lo && v <= bin.hi) {
        bin.observed += 1.0;
        break;
      }
    }
  }

  // Merge adjacent bins left to right until all expected counts reach 5.
  std::vector<Bin> merged;
  Bin acc = bins.front();
  for (std::size_t i = 1; i < bins.size(); ++i) {
    if (acc.expected < 5.0) {
      acc.hi = bins[i].hi;
      acc.expected += bins[i].expected;
      acc.observed += bins[i].observed;
    } else {
      merged.push_back(acc);
      acc = bins[i];
    }
  }
  // Fold a deficient last bin into its neighbour.
  if (acc.expected < 5.0 && !merged.empty()) {
    merged.back().hi = acc.hi;
    merged.back().expected += acc.expected;
    merged.back().observed += acc.observed;
  } else {
    merged.push_back(acc);
  }
  if (merged.size() < 2)
    throw std::invalid_argument("poisson_gof: too few usable bins");

  ChiSquareGof result;
  result.bins = static_cast<int>(merged.size());
  for (const auto& bin : merged) {
    const double diff = bin.observed - bin.expected;
    result.statistic += diff * diff / bin.expected;
  }
  result.dof = result.bins - 1;
  result.p_value = chi_square_sf(result.statistic, result.dof);
  return result;
}

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

}  // namespace opdyn
