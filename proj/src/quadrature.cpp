#include "opdyn/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace opdyn {

namespace {

// Kronrod-15 abscissae on [-1,1] (nonnegative half) and weights; the
// even-indexed interior nodes form the embedded Gauss-7 rule.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

}  // namespace

QuadResult gk15_panel(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = kWgk[7] * fc;
  double gauss = kWg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kXgk[i];
    const double fsum = f(center - dx) + f(center + dx);
    kronrod += kWgk[i] * fsum;
    if (i % 2 == 1) gauss += kWg[i / 2] * fsum;
  }
  QuadResult r;
  r.value = kronrod * half;
  r.error_estimate = std::abs((kronrod - gauss) * half);
  r.evaluations = 15;
  r.converged = true;
  return r;
}

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, double rel_tol, int max_panels) {
  struct Panel {
    double a, b, value, error;
  };
  if (a == b) return {0.0, 0.0, true, 0};

  QuadResult first = gk15_panel(f, a, b);
  std::vector<Panel> panels{{a, b, first.value, first.error_estimate}};
  double total_value = first.value;
  double total_error = first.error_estimate;
  int evaluations = first.evaluations;

  auto tolerance = [&] {
    return std::max(abs_tol, rel_tol * std::abs(total_value));
  };

  while (total_error > tolerance() &&
         static_cast<int>(panels.size()) < max_panels) {
    // Split the panel with the largest error estimate.
    std::size_t worst = 0;
    for (std::size_t i = 1; i < panels.size(); ++i) {
      if (panels[i].error > panels[worst].error) worst = i;
    }
    const Panel p = panels[worst];
    const double mid = 0.5 * (p.a + p.b);
    if (mid <= p.a || mid >= p.b) break;  // interval at floating resolution
    const QuadResult left = gk15_panel(f, p.a, mid);
    const QuadResult right = gk15_panel(f, mid, p.b);
    evaluations += left.evaluations + right.evaluations;
    total_value += left.value + right.value - p.value;
    total_error += left.error_estimate + right.error_estimate - p.error;
    panels[worst] = {p.a, mid, left.value, left.error_estimate};
    panels.push_back({mid, p.b, right.value, right.error_estimate});
  }

  QuadResult r;
  r.value = total_value;
  r.error_estimate = total_error;
  r.converged = total_error <= tolerance();
  r.evaluations = evaluations;
  return r;
}

ImproperResult integrate_to_infinity(const std::function<double(double)>& f,
                                     double a, double abs_tol,
                                     double initial_window, int max_doublings) {
  ImproperResult result;
  double lo = a;
  double window = initial_window;
  constexpr int kMinWindows = 3;
  for (int k = 0; k < max_doublings; ++k) {
    const double hi = lo + window;
    const QuadResult piece = integrate(f, lo, hi, abs_tol / 8.0, 1e-13);
    result.value += piece.value;
    result.last_window_contribution = piece.value;
    result.truncation_point = hi;
    if (k + 1 >= kMinWindows &&
        std::abs(piece.value) < abs_tol / 10.0) {
      result.converged = true;
      return result;
    }
    lo = hi;
    window *= 2.0;
  }
  result.converged = false;
  return result;
}

}  // namespace opdyn
