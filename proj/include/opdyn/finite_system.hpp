#ifndef OPDYN_FINITE_SYSTEM_HPP
#define OPDYN_FINITE_SYSTEM_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "opdyn/rates.hpp"
#include "opdyn/rng.hpp"

namespace opdyn {

class InitialCondition {
 public:
  enum class Kind { constant, iid_uniform, iid_two_point, custom };

  static InitialCondition constant(double c);
  static InitialCondition iid_uniform(double support);    // uniform on [-L, L]
  static InitialCondition iid_two_point(double support);  // +-L with prob 1/2
  static InitialCondition custom(std::vector<double> pressures);

  Kind kind() const { return kind_; }
  // L such that every initial pressure lies in [-L, L].
  double support_bound() const { return support_; }
  // One pressure per actor; a custom list must have length n.
  std::vector<double> sample(int n, PhiloxRng& rng) const;
  // m i.i.d. draws from the law (custom lists are resampled with replacement);
  // used by the limit-equation solver.
  std::vector<double> sample_iid(int m, PhiloxRng& rng) const;
  std::string describe() const;

 private:
  InitialCondition(Kind kind, double support, std::vector<double> values)
      : kind_(kind), support_(support), values_(std::move(values)) {}
  Kind kind_;
  double support_;
  std::vector<double> values_;
};

struct ModelParams {
  int n_actors = 2;
  double h = 1.0;
  RateFunction rate = RateFunction::tanh_plus_one();
  double horizon = 1.0;
  std::uint64_t seed = 0;
  InitialCondition initial = InitialCondition::constant(0.0);

  void validate() const;  // N >= 2, h > 0, T > 0
};

struct EventRecord {
  double time = 0.0;
  int actor = 0;
  int opinion = 0;  // +1 or -1
};

// Pressures are stored as base[a] + shift: an opinion event adds o*h/N to the
// common shift and rewrites only the acting actor's base, so applying the
// reset map costs O(log N) including the running max|pressure| bookkeeping.
class SystemState {
 public:
  SystemState(std::vector<double> pressures, bool track_extremes = true);

  double time() const { return time_; }
  int size() const { return static_cast<int>(base_.size()); }
  double pressure(int actor) const { return base_[actor] + shift_; }
  std::vector<double> pressures() const;
  double pressure_sum() const { return base_sum_ + shift_ * size(); }
  double max_abs_pressure() const;

  std::uint64_t total_jumps() const { return total_jumps_; }
  const std::vector<std::uint64_t>& jump_counts() const { return jump_counts_; }

  void advance_time(double dt) { time_ += dt; }
  // The reset map: acting actor to 0, everyone else shifted by opinion*h/N.
  void apply_opinion(int actor, int opinion, double h);

 private:
  std::vector<double> base_;
  double shift_ = 0.0;
  double base_sum_ = 0.0;
  double time_ = 0.0;
  std::vector<std::uint64_t> jump_counts_;
  std::uint64_t total_jumps_ = 0;
  bool track_extremes_;
  std::multiset<double> base_sorted_;
};

// Sum over actors of big_phi(pressure); the spent clock rate of the chain.
double total_rate(const SystemState& state, const RateFunction& rate);

// One exact jump: exponential waiting time on the total rate, categorical
// (actor, opinion) selection, reset map. Returns nothing if the total rate
// vanished (absorbing state).
std::optional<EventRecord> step(SystemState& state, const RateFunction& rate,
                                double h, PhiloxRng& rng);

struct GridSample {
  double t = 0.0;
  double mean_pressure = 0.0;
  std::uint64_t total_jumps = 0;
};

struct Trajectory {
  std::vector<GridSample> grid;
  std::vector<EventRecord> events;                // when requested
  std::vector<std::vector<double>> actor_rows;    // per grid time, when requested
  std::vector<double> phi_plus_mean;              // mean_a phi(+U(a)), when requested
  std::vector<double> phi_minus_mean;             // mean_a phi(-U(a))
  std::vector<std::uint64_t> final_jump_counts;
  bool halted = false;
  double halt_time = 0.0;
  // Worst observed excess of |U| over L + h Z/N; stays at 0 on correct runs.
  double bound_violation = 0.0;
};

struct SimulateOptions {
  int grid_points = 301;  // uniform grid on [0, T] including both endpoints
  bool record_events = false;
  bool record_actor_pressures = false;
  bool record_phi_means = false;
  bool check_pathwise_bound = true;
  int replica = 0;
};

// Exact event-driven simulation; grid observables are left limits.
// Deterministic given (params.seed, options.replica).
Trajectory simulate(const ModelParams& params, const SimulateOptions& options = {});

struct DecileRow {
  double quantile = 0.0;       // empirical decile of Z_T
  double empirical_sf = 0.0;   // P_emp(Z_T > q)
  double bound_sf = 0.0;       // P(N + 2 Poisson(T N M<(2h)) > q)
  double margin = 0.0;         // bound_sf + 3se - empirical_sf
};

struct DominanceReport {
  std::vector<DecileRow> rows;
  bool decile_pass = true;
  double mean_jumps_per_actor = 0.0;
  double mean_bound = 0.0;       // 1 + 2 T M<(2h)
  double mean_std_error = 0.0;
  bool mean_pass = true;
  bool degenerate = false;       // T == 0
  int replicas = 0;
  bool pass() const { return degenerate || (decile_pass && mean_pass); }
};

// Empirical check of the jump-count domination Z_T <= N + 2 Poisson(T N M<(2h))
// at the sample deciles, plus the per-actor mean bound 1 + 2 T M<(2h).
DominanceReport check_jump_dominance(const ModelParams& params, int replicas,
                                     int workers = 1);

// Initial-condition-free expectation bound for |U_t(a)|, evaluated by
// quadrature of E[(M>)^{-1}(E)] + h + h (t-s) M<(2h) where E is exponential
// with rate t-s. Returns nothing when M> is bounded (the bound is vacuous).
// Note: the rate convention follows the first-mark-height construction, under
// which E has rate t-s (mean 1/(t-s)).
std::optional<double> initial_free_bound_diagnostic(const RateFunction& rate,
                                                    double t, double s, double h);

}  // namespace opdyn

#endif  // OPDYN_FINITE_SYSTEM_HPP
