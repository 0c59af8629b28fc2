#ifndef OPDYN_QUADRATURE_HPP
#define OPDYN_QUADRATURE_HPP

#include <functional>

namespace opdyn {

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = false;
  int evaluations = 0;
};

// Single 15-point Gauss-Kronrod panel on [a,b]; error estimate |K15 - G7|.
QuadResult gk15_panel(const std::function<double(double)>& f, double a, double b);

// Globally adaptive Gauss-Kronrod on [a,b]: bisects the worst panel until the
// summed error estimate drops below max(abs_tol, rel_tol*|value|).
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, double rel_tol = 1e-12,
                     int max_panels = 4000);

struct ImproperResult {
  double value = 0.0;
  bool converged = false;
  double last_window_contribution = 0.0;
  double truncation_point = 0.0;
};

// Improper integral over [a, infinity) by interval doubling: windows
// [a, a+w], [a+w, a+3w], ... with w doubling each step; stops once a window
// contributes less than abs_tol/10 (after a minimum number of windows).
ImproperResult integrate_to_infinity(const std::function<double(double)>& f,
                                     double a, double abs_tol,
                                     double initial_window = 1.0,
                                     int max_doublings = 60);

}  // namespace opdyn

#endif  // OPDYN_QUADRATURE_HPP
