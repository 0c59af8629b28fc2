#include "opdyn/invariant.hpp"

#include <algorithm>
#include <cmath>

#include "opdyn/quadrature.hpp"

namespace opdyn {

namespace {
constexpr int kPanelsPerWindow = 64;
// exp(-50) ~ 2e-22: beyond this point the density carries no mass we can
// resolve at double precision.
constexpr double kLogTailCut = 50.0;
}  // namespace

InvariantDensity::InvariantDensity(const RateFunction& rate, double h,
                                   double gamma, double quad_tol)
    : rate_(rate), h_(h), gamma_(gamma), mag_gamma_(std::abs(gamma)),
      quad_tol_(quad_tol) {
  if (gamma == 0.0)
    throw std::invalid_argument(
        "InvariantDensity: gamma = 0 is the point-mass branch");
  if (!(h > 0.0)) throw std::invalid_argument("InvariantDensity: h <= 0");
  build_table();
}

void InvariantDensity::build_table() {
  const double scale = mag_gamma_ * h_;
  panel_x_.push_back(0.0);
  prefix_bigphi_.push_back(0.0);
  const auto big_phi = [&](double r) { return rate_.big_phi(r); };

  // The density lives on the x-range where the cumulative big_phi is of
  // order scale; size the first window accordingly so small gamma*h still
  // resolves (the mass then sits at x ~ scale / big_phi(0)).
  double window = std::min(1.0, scale / std::max(rate_.big_phi(0.0), 1e-6));
  double lo = 0.0;
  bool tail_reached = false;
  for (int k = 0; k < 48 && !tail_reached; ++k) {
    const double width = window / kPanelsPerWindow;
    for (int i = 0; i < kPanelsPerWindow; ++i) {
      const double a = lo + width * i;
      const double b = a + width;
      const QuadResult piece = gk15_panel(big_phi, a, b);
      panel_x_.push_back(b);
      prefix_bigphi_.push_back(prefix_bigphi_.back() + piece.value);
      if (prefix_bigphi_.back() / scale > kLogTailCut) {
        tail_reached = true;
        break;
      }
    }
    lo += window;
    window *= 2.0;
  }
  if (!tail_reached)
    throw integrability_error(
        "invariant density: normalizing integral fails the tail test "
        "(integrability hypothesis violated?)");

  // Normalizer over the table range; the truncated tail is below exp(-50)
  // pointwise and the window-doubling bound keeps it under quad_tol/10.
  double norm = 0.0;
  const auto psi = [&](double x) { return unnormalized(x); };
  for (std::size_t i = 0; i + 1 < panel_x_.size(); ++i) {
    norm += gk15_panel(psi, panel_x_[i], panel_x_[i + 1]).value;
  }
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw integrability_error("invariant density: degenerate normalizer");
  norm_ = norm;
}

double InvariantDensity::cumulative_big_phi(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= panel_x_.back()) {
    const double extra =
        integrate([&](double r) { return rate_.big_phi(r); }, panel_x_.back(),
                  x, quad_tol_ * 1e-3)
            .value;
    return prefix_bigphi_.back() + extra;
  }
  const auto it =
      std::upper_bound(panel_x_.begin(), panel_x_.end(), x) - 1;
  const std::size_t i = it - panel_x_.begin();
  const double partial =
      gk15_panel([&](double r) { return rate_.big_phi(r); }, panel_x_[i], x)
          .value;
  return prefix_bigphi_[i] + partial;
}

double InvariantDensity::unnormalized(double x) const {
  return std::exp(-cumulative_big_phi(x) / (mag_gamma_ * h_));
}

double InvariantDensity::value(double x) const {
  const double y = (gamma_ > 0.0) ? x : -x;
  if (y < 0.0) return 0.0;
  return unnormalized(y) / norm_;
}

double InvariantDensity::cdf_positive(double x) const {
  if (x <= 0.0) return 0.0;
  if (prefix_mass_.empty()) {
    prefix_mass_.resize(panel_x_.size());
    prefix_mass_[0] = 0.0;
    for (std::size_t i = 0; i + 1 < panel_x_.size(); ++i) {
      prefix_mass_[i + 1] =
          prefix_mass_[i] +
          gk15_panel([&](double t) { return unnormalized(t); }, panel_x_[i],
                     panel_x_[i + 1])
              .value;
    }
  }
  if (x >= panel_x_.back()) return 1.0;
  const auto it = std::upper_bound(panel_x_.begin(), panel_x_.end(), x) - 1;
  const std::size_t i = it - panel_x_.begin();
  const double partial =
      gk15_panel([&](double t) { return unnormalized(t); }, panel_x_[i], x)
          .value;
  return std::min(1.0, (prefix_mass_[i] + partial) / norm_);
}

double InvariantDensity::cdf(double x) const {
  if (gamma_ > 0.0) return cdf_positive(x);
  return 1.0 - cdf_positive(-x);
}

double InvariantDensity::expectation(
    const std::function<double(double)>& f) const {
  // Integrate over the positive-branch variable, mapping back for gamma < 0.
  const double sign = (gamma_ > 0.0) ? 1.0 : -1.0;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < panel_x_.size(); ++i) {
    total += gk15_panel(
                 [&](double y) { return f(sign * y) * unnormalized(y); },
                 panel_x_[i], panel_x_[i + 1])
                 .value;
  }
  return total / norm_;
}

double InvariantDensity::mean() const {
  return expectation([](double x) { return x; });
}

double gamma_residual_reduced(const RateFunction& rate, double h, double gamma,
                              double quad_tol) {
  if (!rate.odd_plus_constant())
    throw std::invalid_argument(
        "gamma_residual_reduced: needs an odd-plus-constant family");
  if (gamma == 0.0) return 0.0;
  const double b = rate.offset();
  const auto integrand = [&](double u) {
    return std::exp(-u) * rate.odd_part(u * h * gamma / (2.0 * b));
  };
  const ImproperResult quad = integrate_to_infinity(integrand, 0.0, quad_tol);
  if (!quad.converged)
    throw integrability_error("gamma_residual_reduced: quadrature stalled");
  return 2.0 * quad.value - gamma;
}

double gamma_residual_general(const RateFunction& rate, double h, double gamma,
                              double quad_tol) {
  if (gamma == 0.0) return 0.0;
  if (gamma < 0.0) return -gamma_residual_general(rate, h, -gamma, quad_tol);
  const InvariantDensity density(rate, h, gamma, quad_tol);
  const double drift = density.expectation([&](double x) {
    const auto [plus, minus] = rate.phi_pair(x);
    return plus - minus;
  });
  return drift - gamma;
}

double gamma_residual(const RateFunction& rate, double h, double gamma,
                      double quad_tol) {
  if (gamma == 0.0) return 0.0;
  if (rate.odd_plus_constant())
    return gamma_residual_reduced(rate, h, gamma, quad_tol);
  return gamma_residual_general(rate, h, gamma, quad_tol);
}

double GammaSolution::positive_root() const {
  double best = 0.0;
  for (double r : roots) best = std::max(best, r);
  return best;
}

GammaSolution solve_gamma(const RateFunction& rate, double h,
                          double residual_tol) {
  if (!(h > 0.0)) throw std::invalid_argument("solve_gamma: h <= 0");
  GammaSolution sol;
  sol.residual_tol = residual_tol;
  sol.roots.push_back(0.0);
  if (rate.odd_plus_constant())
    sol.threshold = rate.offset() / rate.odd_part_derivative(0.0);

  const double quad_tol = std::min(1e-12, residual_tol * 1e-2);
  const auto residual = [&](double g) {
    return gamma_residual(rate, h, g, quad_tol);
  };

  double gamma_max = 2.0 * rate.m_less(10.0 * h);
  int growth = 0;
  while (residual(gamma_max) > 0.0) {
    gamma_max *= 2.0;
    if (++growth > 12)
      throw std::runtime_error(
          "solve_gamma: residual still positive at the scan limit; "
          "increase the scan range");
  }
  sol.scan_limit = gamma_max;

  const double gamma_min = 1e-6;
  std::vector<double> positive_roots;
  double prev_g = gamma_min;
  double prev_r = residual(prev_g);
  for (double g = gamma_min * 1.2; prev_g < gamma_max; g *= 1.2) {
    g = std::min(g, gamma_max);
    const double r = residual(g);
    if ((prev_r > 0.0 && r <= 0.0) || (prev_r < 0.0 && r >= 0.0)) {
      double lo = prev_g, hi = g, r_lo = prev_r;
      double mid = 0.5 * (lo + hi), r_mid = residual(mid);
      for (int it = 0; it < 200 && std::abs(r_mid) >= residual_tol; ++it) {
        if ((r_lo > 0.0) == (r_mid > 0.0)) {
          lo = mid;
          r_lo = r_mid;
        } else {
          hi = mid;
        }
        mid = 0.5 * (lo + hi);
        r_mid = residual(mid);
        if (hi - lo < 1e-15 * std::max(1.0, hi)) break;
      }
      if (std::abs(r_mid) < residual_tol) positive_roots.push_back(mid);
    }
    if (g >= gamma_max) break;
    prev_g = g;
    prev_r = r;
  }

  if (rate.odd_plus_constant() && positive_roots.size() > 1)
    throw std::logic_error(
        "solve_gamma: multiple positive roots for an odd-plus-constant "
        "family (contradicts the strict-monotonicity structure)");

  for (double r : positive_roots) {
    sol.roots.push_back(r);
    sol.roots.push_back(-r);
  }
  std::sort(sol.roots.begin(), sol.roots.end());
  return sol;
}

std::vector<PhaseDiagramRow> phase_diagram(const RateFunction& rate,
                                           const std::vector<double>& h_grid,
                                           double residual_tol) {
  std::vector<PhaseDiagramRow> rows;
  for (double h : h_grid) {
    if (!(h > 0.0)) throw std::invalid_argument("phase_diagram: h <= 0");
    PhaseDiagramRow row;
    row.h = h;
    const GammaSolution sol = solve_gamma(rate, h, residual_tol);
    row.gamma_star = sol.positive_root();
    if (row.gamma_star > 0.0)
      row.invariant_mean = InvariantDensity(rate, h, row.gamma_star).mean();
    rows.push_back(row);
  }
  return rows;
}

double HouseOfCardsPath::value_at(double t) const {
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  if (it == jump_times.begin()) return y0 + slope * t;
  return slope * (t - *(it - 1));
}

namespace {

// Thinning loop shared by the path simulator and the first-passage sampler.
// on_jump returning false stops the walk.
template <class OnJump>
void walk_house_of_cards(const RateFunction& rate, double slope, double y0,
                         double horizon, PhiloxRng& rng, OnJump&& on_jump) {
  double t = 0.0;
  double t_anchor = 0.0;
  double y_anchor = y0;
  const auto y_at = [&](double s) { return y_anchor + slope * (s - t_anchor); };

  if (slope == 0.0) {
    // Piecewise-constant position: holding times are exactly exponential.
    while (t < horizon) {
      const double intensity = rate.big_phi(y_anchor);
      if (!(intensity > 0.0)) return;  // absorbing (needs big_phi(y) = 0)
      t += rng.exponential(intensity);
      if (t >= horizon) return;
      if (!on_jump(t)) return;
      y_anchor = 0.0;
      t_anchor = t;
    }
    return;
  }

  while (t < horizon) {
    const double window = std::min(
        horizon - t, std::max(0.25, 1.0 / (1.0 + std::abs(slope))));
    const double y_now = y_at(t);
    const double y_end = y_now + slope * window;
    const double reach = std::max(
        {std::abs(y_now), std::abs(y_end), std::abs(slope) * window});
    const double lambda = rate.m_less(reach);
    const double tau = rng.exponential(lambda);
    if (tau >= window) {
      t += window;
      continue;
    }
    t += tau;
    const double y = y_at(t);
    const double intensity = rate.big_phi(y);
    if (intensity > lambda * (1.0 + 1e-9))
      throw std::logic_error("house of cards: segment rate bound breached");
    const double z = rng.uniform(0.0, lambda);
    if (z <= intensity) {
      if (!on_jump(t)) return;
      y_anchor = 0.0;
      t_anchor = t;
    }
  }
}

}  // namespace

HouseOfCardsPath simulate_house_of_cards(const RateFunction& rate, double h,
                                         double gamma, double y0,
                                         double horizon, PhiloxRng& rng) {
  if (!(horizon > 0.0))
    throw std::invalid_argument("simulate_house_of_cards: horizon <= 0");
  HouseOfCardsPath path;
  path.y0 = y0;
  path.slope = h * gamma;
  path.horizon = horizon;
  walk_house_of_cards(rate, path.slope, y0, horizon, rng, [&](double t) {
    path.jump_times.push_back(t);
    return true;
  });
  return path;
}

std::vector<double> house_of_cards_samples(const RateFunction& rate, double h,
                                           double gamma, double y0,
                                           double burn_in, int n_samples,
                                           double spacing, PhiloxRng& rng) {
  if (n_samples < 1 || !(spacing > 0.0) || burn_in < 0.0)
    throw std::invalid_argument("house_of_cards_samples: bad arguments");
  const double horizon = burn_in + n_samples * spacing;
  const HouseOfCardsPath path =
      simulate_house_of_cards(rate, h, gamma, y0, horizon, rng);
  std::vector<double> out(n_samples);
  for (int i = 0; i < n_samples; ++i)
    out[i] = path.value_at(burn_in + (i + 1) * spacing);
  return out;
}

double sample_return_to_zero(const RateFunction& rate, double h, double gamma,
                             double x, PhiloxRng& rng) {
  const double slope = h * gamma;
  if (slope == 0.0) return rng.exponential(rate.big_phi(x));
  double t = 0.0;
  const double window = std::max(0.25, 1.0 / (1.0 + std::abs(slope)));
  for (;;) {
    const double y_now = x + slope * t;
    const double y_end = y_now + slope * window;
    const double reach = std::max(
        {std::abs(y_now), std::abs(y_end), std::abs(slope) * window});
    const double lambda = rate.m_less(reach);
    const double tau = rng.exponential(lambda);
    if (tau >= window) {
      t += window;
      continue;
    }
    t += tau;
    const double intensity = rate.big_phi(x + slope * t);
    if (intensity > lambda * (1.0 + 1e-9))
      throw std::logic_error("sample_return_to_zero: rate bound breached");
    if (rng.uniform(0.0, lambda) <= intensity) return t;
  }
}

double expected_return_time(const RateFunction& rate, double h, double gamma,
                            double x, double quad_tol) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("expected_return_time: needs gamma > 0");
  if (x < 0.0)
    throw std::invalid_argument("expected_return_time: x must be >= 0");
  const double scale = h * gamma;
  const auto inner = [&](double v) {
    return integrate([&](double u) { return rate.big_phi(x + u); }, 0.0, v,
                     quad_tol * 1e-3)
        .value;
  };
  const auto integrand = [&](double v) {
    return std::exp(-inner(v) / scale);
  };
  const ImproperResult quad = integrate_to_infinity(integrand, 0.0, quad_tol);
  if (!quad.converged)
    throw integrability_error(
        "expected_return_time: tail does not converge (integrability "
        "hypothesis violated?)");
  return quad.value / scale;
}

}  // namespace opdyn
