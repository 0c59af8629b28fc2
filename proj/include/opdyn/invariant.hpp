#ifndef OPDYN_INVARIANT_HPP
#define OPDYN_INVARIANT_HPP

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "opdyn/rates.hpp"
#include "opdyn/rng.hpp"

namespace opdyn {

// Raised when the normalizing integral of an invariant density fails the
// adaptive tail test (the integrability hypothesis does not hold).
class integrability_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Stationary density of the house-of-cards process for gamma != 0:
//   g(x) = exp(-(1/(gamma h)) int_0^x big_phi) / norm_const  on [0, inf)
// for gamma > 0, mirrored onto (-inf, 0] for gamma < 0. The cumulative
// big_phi integral is cached on a panel table built by interval doubling;
// the tail is truncated once it contributes less than quad_tol/10.
class InvariantDensity {
 public:
  InvariantDensity(const RateFunction& rate, double h, double gamma,
                   double quad_tol = 1e-10);

  double gamma() const { return gamma_; }
  double quad_tol() const { return quad_tol_; }
  int support_sign() const { return gamma_ > 0.0 ? +1 : -1; }
  double norm_const() const { return norm_; }
  double value(double x) const;
  double cdf(double x) const;
  double mean() const;
  // E[f(X)] over the support by panel quadrature.
  double expectation(const std::function<double(double)>& f) const;

 private:
  double cumulative_big_phi(double x) const;  // x >= 0, table-backed
  double unnormalized(double x) const;        // x >= 0
  double cdf_positive(double x) const;
  void build_table();

  RateFunction rate_;
  double h_;
  double gamma_;      // as given (sign decides the support)
  double mag_gamma_;  // |gamma|
  double quad_tol_;
  double norm_ = 0.0;
  std::vector<double> panel_x_;        // panel boundaries, panel_x_[0] = 0
  std::vector<double> prefix_bigphi_;  // int_0^{panel_x_[i]} big_phi
  mutable std::vector<double> prefix_mass_;  // int_0^{panel_x_[i]} unnormalized
};

// Fixed-point residual int (phi(x) - phi(-x)) g_gamma(dx) - gamma.
// gamma = 0 is the point-mass branch: residual 0 by definition.
// Odd-plus-constant families dispatch to the reduced single-integral form
// 2 int_0^inf e^-u f(u h gamma / (2B)) du - gamma; the general form stays
// available for cross-checking.
double gamma_residual(const RateFunction& rate, double h, double gamma,
                      double quad_tol = 1e-12);
double gamma_residual_general(const RateFunction& rate, double h, double gamma,
                              double quad_tol = 1e-12);
double gamma_residual_reduced(const RateFunction& rate, double h, double gamma,
                              double quad_tol = 1e-13);

struct GammaSolution {
  std::vector<double> roots;         // contains 0; closed under negation
  std::optional<double> threshold;   // B/f'(0) for odd-plus-constant families
  double residual_tol = 0.0;
  double scan_limit = 0.0;

  double positive_root() const;  // largest positive root, 0 if none
};

// Root scan of the fixed-point residual on a geometric grid with bisection.
// 0 is always included exactly (the point-mass branch, never via numerics).
// For odd-plus-constant families at most one positive root can exist; other
// families report every sign change found.
GammaSolution solve_gamma(const RateFunction& rate, double h,
                          double residual_tol = 1e-10);

struct PhaseDiagramRow {
  double h = 0.0;
  double gamma_star = 0.0;      // 0 below the threshold
  double invariant_mean = 0.0;  // int x g_{gamma*}(dx), 0 for the point mass
};

std::vector<PhaseDiagramRow> phase_diagram(const RateFunction& rate,
                                           const std::vector<double>& h_grid,
                                           double residual_tol = 1e-10);

// Exact simulation of the auxiliary process: linear drift h*gamma between
// jumps, reset to 0 at rate big_phi(Y), thinning against per-segment bounds.
struct HouseOfCardsPath {
  double y0 = 0.0;
  double slope = 0.0;  // h * gamma
  double horizon = 0.0;
  std::vector<double> jump_times;

  double value_at(double t) const;
};

HouseOfCardsPath simulate_house_of_cards(const RateFunction& rate, double h,
                                         double gamma, double y0,
                                         double horizon, PhiloxRng& rng);

// Position samples at times burn_in + spacing, burn_in + 2 spacing, ...
std::vector<double> house_of_cards_samples(const RateFunction& rate, double h,
                                           double gamma, double y0,
                                           double burn_in, int n_samples,
                                           double spacing, PhiloxRng& rng);

// First passage to 0 started from x (one thinned simulation).
double sample_return_to_zero(const RateFunction& rate, double h, double gamma,
                             double x, PhiloxRng& rng);

// E[tau_x] by quadrature: (1/(h gamma)) int_0^inf
// exp(-(1/(h gamma)) int_0^v big_phi(x+u) du) dv, for gamma > 0.
double expected_return_time(const RateFunction& rate, double h, double gamma,
                            double x, double quad_tol = 1e-10);

}  // namespace opdyn

#endif  // OPDYN_INVARIANT_HPP
