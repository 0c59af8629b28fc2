#ifndef OPDYN_LIMIT_SDE_HPP
#define OPDYN_LIMIT_SDE_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "opdyn/finite_system.hpp"
#include "opdyn/rates.hpp"
#include "opdyn/rng.hpp"

namespace opdyn {

// Time-gridded estimate of t -> (E[phi(U_t)], E[phi(-U_t)]), the nonlinearity
// of the limit equation. Piecewise linear on a uniform grid; the cumulative
// integral of (a_plus - a_minus) is kept alongside so the inter-jump flow
// integrates in closed form.
class DriftCurve {
 public:
  DriftCurve(double horizon, int cells);
  static DriftCurve from_columns(const std::vector<double>& times,
                                 const std::vector<double>& a_plus,
                                 const std::vector<double>& a_minus);

  double horizon() const { return horizon_; }
  int cells() const { return cells_; }
  int nodes() const { return cells_ + 1; }
  double dt() const { return dt_; }
  double node_time(int k) const { return dt_ * k; }

  void set_node(int k, double a_plus, double a_minus);
  void finalize();  // rebuild the cumulative integral after edits

  double a_plus(double t) const;
  double a_minus(double t) const;
  double difference(double t) const;  // a_plus - a_minus at t
  const std::vector<double>& a_plus_nodes() const { return a_plus_; }
  const std::vector<double>& a_minus_nodes() const { return a_minus_; }
  // Integral of (a_plus - a_minus) over [0, t].
  double cumulative(double t) const;
  const std::vector<double>& cumulative_nodes() const { return cum_; }
  // Times where a_plus - a_minus changes sign (the flow direction flips).
  std::vector<double> sign_change_times() const;

  void write_csv(std::ostream& os) const;  // t,a_plus,a_minus
  static DriftCurve read_csv(std::istream& is);

 private:
  void check_node(int k) const;
  double horizon_;
  int cells_;
  double dt_;
  std::vector<double> a_plus_, a_minus_, cum_;
  bool finalized_ = false;
};

// gamma_t = 2L + 2 h t M<(2h): a priori sup bound for the limit process on
// [0, t]; doubles as the truncation radius of the Picard scheme.
double apriori_gamma(double support_bound, double t, double h,
                     const RateFunction& rate);

struct ContractionReport {
  double t_star = 0.0;  // largest window length with contraction factor < 1
  double c_at_t_star = 0.0;
};

// Theoretical contraction factor c(t) = 2 h C_lip t exp(t C(T)) with
// C(s) = 2 (L + 2 h K s) C_lip, K the clamped-rate bound and C_lip the local
// Lipschitz constant, both at the truncation radius.
ContractionReport contraction_report(const RateFunction& rate, double h,
                                     double support_bound, double horizon);

struct LimitWalkStats {
  std::uint64_t candidates = 0;
  std::uint64_t jumps = 0;
  double sup_abs = 0.0;
  std::uint64_t clamp_hits = 0;
  double final_value = 0.0;
};

// Advances one limit-equation path from t_start to t_end by thinning: between
// jumps the state follows the deterministic flow of `drift`; candidate marks
// are accepted into opinion +1 when z <= phi(+u) and into opinion -1 when
// phi(+u) < z <= Phi(u) (one candidate stream split by z-intervals, equal in
// law to two independent measures). phi is clamped outside
// [-truncation_radius, truncation_radius]. Jump times are appended to
// `jump_times`.
LimitWalkStats walk_limit_path(const RateFunction& rate, double h,
                               const DriftCurve& drift, double u0,
                               double t_start, double t_end,
                               double truncation_radius, PhiloxRng& rng,
                               std::vector<double>& jump_times,
                               std::span<const double> flow_vertices);

struct LimitPath {
  double u0 = 0.0;
  double h = 0.0;
  const DriftCurve* drift = nullptr;
  double horizon = 0.0;
  std::vector<double> jump_times;
  double recorded_sup_abs = 0.0;

  double value_at(double t) const;
};

LimitPath sample_limit_path(const RateFunction& rate, double h,
                            const DriftCurve& drift, double u0, PhiloxRng& rng,
                            double horizon, double truncation_radius);

struct PicardConfig {
  int sample_paths = 100000;      // Monte Carlo paths per iteration (>= 1000)
  int cells_per_unit_time = 512;  // drift grid resolution
  double tolerance = 0.0;         // sup-norm stop; 0 = 5x the MC standard error
  int max_iterations = 50;
  double window_override = 0.0;   // 0 = start from the full horizon
  int workers = 1;
};

struct PicardDiagnostics {
  std::vector<std::vector<double>> window_residuals;
  int windows_used = 0;
  double tolerance_used = 0.0;
  double max_curve_std_error = 0.0;
  std::vector<double> node_std_error;  // per node, max of the +- estimates
  double truncation_radius = 0.0;
  double pathwise_sup = 0.0;          // max |U| over final-pass paths
  std::uint64_t clamp_hits = 0;       // final pass; 0 when bounds hold
  double jump_size_integral = 0.0;    // trapezoid of E[|U| Phi(U)] over [0,T]
  double jump_size_integral_bound = 0.0;  // 2 E|U0| + 2 h T M<(2h)
  std::uint64_t total_jumps = 0;
};

class picard_convergence_error : public std::runtime_error {
 public:
  picard_convergence_error(const std::string& what,
                           std::vector<double> residuals)
      : std::runtime_error(what), residual_history(std::move(residuals)) {}
  std::vector<double> residual_history;
};

// Picard iteration for the limit equation: each sweep simulates sample_paths
// independent paths against the previous drift curve (common random numbers
// across sweeps) and re-estimates the curve from sample means of phi(+-U_t).
// If the full horizon stalls, it restarts on dyadically shrunken windows and
// chains them.
DriftCurve picard_solve(const RateFunction& rate, double h,
                        const InitialCondition& initial, double horizon,
                        const PicardConfig& config, std::uint64_t seed,
                        PicardDiagnostics* diagnostics = nullptr);

}  // namespace opdyn

#endif  // OPDYN_LIMIT_SDE_HPP
