#include "opdyn/rates.hpp"

#include <cmath>

namespace opdyn {

namespace {
// exp() stays finite well past this, but downstream rates would lose all
// precision; simulated pressures never get anywhere near it.
constexpr double kExpArgLimit = 700.0;
constexpr double kGridRefineTol = 1e-9;
}  // namespace

RateFunction RateFunction::tanh_plus_one() {
  return RateFunction(
      RateFamily::tanh_plus_one, [](double x) { return std::tanh(x); },
      [](double x) {
        const double c = std::cosh(x);
        return 1.0 / (c * c);
      },
      1.0);
}

RateFunction RateFunction::exponential() {
  return RateFunction(RateFamily::exponential, {}, {}, 0.0);
}

RateFunction RateFunction::affine_odd(std::function<double(double)> f,
                                      std::function<double(double)> f_prime,
                                      double b) {
  if (!(b > 0.0)) throw std::invalid_argument("affine_odd: B must be positive");
  if (!f || !f_prime)
    throw std::invalid_argument("affine_odd: f and f' are required");
  RateFunction rf(RateFamily::affine_odd, std::move(f), std::move(f_prime), b);
  rf.validate_affine_odd();
  return rf;
}

void RateFunction::validate_affine_odd() const {
  // Spot checks of the structural hypotheses on a fixed grid; these are
  // mathematical assumptions on user closures that can only be sampled.
  if (std::abs(f_(0.0)) > 1e-12)
    throw std::invalid_argument("affine_odd: f(0) != 0");
  double prev_derivative = f_prime_(0.0);
  if (!(prev_derivative > 0.0))
    throw std::invalid_argument("affine_odd: f'(0) must be positive");
  double x = 1e-3;
  for (int i = 0; i < 60; ++i) {
    const double fx = f_(x);
    if (std::abs(fx + f_(-x)) > 1e-9 * std::max(1.0, std::abs(fx)))
      throw std::invalid_argument("affine_odd: f is not odd at x=" +
                                  std::to_string(x));
    if (fx > b_ + 1e-12)
      throw std::invalid_argument("affine_odd: f(x) > B at x=" +
                                  std::to_string(x));
    const double dx = f_prime_(x);
    if (!(dx > 0.0))
      throw std::invalid_argument("affine_odd: f'(x) <= 0 at x=" +
                                  std::to_string(x));
    if (dx > prev_derivative + 1e-12)
      throw std::invalid_argument("affine_odd: f' not decreasing at x=" +
                                  std::to_string(x));
    prev_derivative = dx;
    x *= 1.5;
    if (x > 50.0) break;
  }
}

double RateFunction::phi(double x) const {
  if (!std::isfinite(x)) throw std::invalid_argument("phi: non-finite input");
  switch (family_) {
    case RateFamily::tanh_plus_one:
      return 1.0 + std::tanh(x);
    case RateFamily::exponential:
      if (std::abs(x) > kExpArgLimit) throw rate_overflow_error(x);
      return std::exp(x);
    case RateFamily::affine_odd:
      return f_(x) + b_;
  }
  return 0.0;
}

std::pair<double, double> RateFunction::phi_pair(double x) const {
  if (family_ == RateFamily::exponential) {
    if (std::abs(x) > kExpArgLimit) throw rate_overflow_error(x);
    const double ex = std::exp(x);
    return {ex, 1.0 / ex};
  }
  const double s = odd_part(x);
  const double b = offset();
  return {b + s, b - s};
}

double RateFunction::big_phi(double r) const {
  const auto [plus, minus] = phi_pair(r);
  return plus + minus;
}

double RateFunction::grid_sup_big_phi(double lo, double hi) const {
  // Geometric refinement until two successive sups agree to kGridRefineTol.
  int n = 16;
  double prev = 0.0;
  for (int pass = 0; pass < 24; ++pass) {
    double sup = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double r = lo + (hi - lo) * static_cast<double>(i) / n;
      sup = std::max(sup, big_phi(r));
    }
    if (pass > 0 && std::abs(sup - prev) < kGridRefineTol) return sup;
    prev = sup;
    n *= 2;
  }
  return prev;
}

double RateFunction::m_less(double l) const {
  if (l < 0.0) throw std::invalid_argument("m_less: l must be >= 0");
  switch (family_) {
    case RateFamily::tanh_plus_one:
      return 2.0;
    case RateFamily::exponential:
      if (l > kExpArgLimit) throw rate_overflow_error(l);
      return 2.0 * std::cosh(l);
    case RateFamily::affine_odd:
      if (l == 0.0) return big_phi(0.0);
      return grid_sup_big_phi(0.0, l);
  }
  return 0.0;
}

double RateFunction::m_greater(double l) const {
  if (l < 0.0) throw std::invalid_argument("m_greater: l must be >= 0");
  switch (family_) {
    case RateFamily::tanh_plus_one:
      return 2.0;
    case RateFamily::exponential:
      // big_phi = 2 cosh is increasing on [0,inf); the infimum over the open
      // interval (l,inf) is attained in the limit at l.
      if (l > kExpArgLimit) throw rate_overflow_error(l);
      return 2.0 * std::cosh(l);
    case RateFamily::affine_odd: {
      // big_phi == 2B up to the oddness tolerance; scan outward until the
      // running infimum stabilizes.
      double inf = big_phi(l + 1e-9);
      double span = 1.0;
      for (int pass = 0; pass < 24; ++pass) {
        double local = inf;
        const int n = 64;
        for (int i = 1; i <= n; ++i) {
          const double r = l + span * static_cast<double>(i) / n;
          local = std::min(local, big_phi(r));
        }
        if (pass > 0 && std::abs(local - inf) < kGridRefineTol) return local;
        inf = local;
        span *= 2.0;
      }
      return inf;
    }
  }
  return 0.0;
}

std::optional<double> RateFunction::m_greater_inverse(double y) const {
  if (y < 0.0) throw std::invalid_argument("m_greater_inverse: y must be >= 0");
  switch (family_) {
    case RateFamily::tanh_plus_one:
      if (y <= 2.0) return 0.0;
      return std::nullopt;
    case RateFamily::exponential:
      if (y <= 2.0) return 0.0;
      return std::acosh(y / 2.0);
    case RateFamily::affine_odd: {
      if (y <= m_greater(0.0)) return 0.0;
      return std::nullopt;  // big_phi bounded by 2B
    }
  }
  return std::nullopt;
}

bool RateFunction::m_greater_diverges() const {
  return family_ == RateFamily::exponential;
}

double RateFunction::grid_sup_derivative(double hi) const {
  int n = 16;
  double prev = 0.0;
  for (int pass = 0; pass < 24; ++pass) {
    double sup = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = hi * static_cast<double>(i) / n;
      sup = std::max(sup, std::max(f_prime_(x), f_prime_(-x)));
    }
    if (pass > 0 && std::abs(sup - prev) < kGridRefineTol) return sup;
    prev = sup;
    n *= 2;
  }
  return prev;
}

double RateFunction::lipschitz_bound(double r) const {
  if (r < 0.0) throw std::invalid_argument("lipschitz_bound: r must be >= 0");
  switch (family_) {
    case RateFamily::tanh_plus_one:
      return 1.0;  // sup of sech^2 is attained at 0
    case RateFamily::exponential:
      if (r > kExpArgLimit) throw rate_overflow_error(r);
      return std::exp(r);
    case RateFamily::affine_odd:
      if (r == 0.0) return f_prime_(0.0);
      return grid_sup_derivative(r);
  }
  return 0.0;
}

double RateFunction::offset() const {
  switch (family_) {
    case RateFamily::tanh_plus_one:
      return 1.0;
    case RateFamily::affine_odd:
      return b_;
    case RateFamily::exponential:
      throw std::logic_error("offset: exponential family has no odd split");
  }
  return 0.0;
}

double RateFunction::odd_part(double x) const {
  switch (family_) {
    case RateFamily::tanh_plus_one:
      return std::tanh(x);
    case RateFamily::affine_odd:
      return f_(x);
    case RateFamily::exponential:
      throw std::logic_error("odd_part: exponential family has no odd split");
  }
  return 0.0;
}

double RateFunction::odd_part_derivative(double x) const {
  switch (family_) {
    case RateFamily::tanh_plus_one: {
      const double c = std::cosh(x);
      return 1.0 / (c * c);
    }
    case RateFamily::affine_odd:
      return f_prime_(x);
    case RateFamily::exponential:
      throw std::logic_error("odd_part_derivative: exponential family");
  }
  return 0.0;
}

std::string RateFunction::name() const {
  switch (family_) {
    case RateFamily::tanh_plus_one:
      return "tanh_plus_one";
    case RateFamily::exponential:
      return "exponential";
    case RateFamily::affine_odd:
      return "affine_odd(B=" + std::to_string(b_) + ")";
  }
  return "?";
}

}  // namespace opdyn
