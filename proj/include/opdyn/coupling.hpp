#ifndef OPDYN_COUPLING_HPP
#define OPDYN_COUPLING_HPP

#include <cstdint>
#include <vector>

#include "opdyn/finite_system.hpp"
#include "opdyn/limit_sde.hpp"
#include "opdyn/rates.hpp"
#include "opdyn/rng.hpp"
#include "opdyn/stats.hpp"

namespace opdyn {

// Replayable view of one Poisson random measure restricted to z <= rate,
// keyed by (seed, replica, actor, opinion). Raising the rate superposes an
// independent keyed layer on (old_rate, new_rate], which preserves both the
// law and every already-revealed candidate.
class SharedPoissonStream {
 public:
  struct Candidate {
    double time;
    double z;
  };

  SharedPoissonStream(std::uint64_t seed, std::uint64_t replica, int actor,
                      int opinion, const std::vector<double>& rate_schedule);

  const Candidate& peek() const { return next_; }
  void advance();
  void reset();
  double rate() const { return layers_.back().z_hi; }

 private:
  struct Layer {
    double z_lo;
    double z_hi;
    PhiloxRng rng;
    Candidate next;
  };

  PhiloxRng make_rng(int layer_index) const;
  void draw_layer(Layer& layer);
  void refresh();

  std::uint64_t seed_;
  std::uint64_t replica_;
  int actor_;
  int opinion_;  // +1 or -1
  std::vector<Layer> layers_;
  std::size_t next_layer_ = 0;
  Candidate next_{0.0, 0.0};
};

struct CouplingResult {
  std::vector<double> sup_errors;  // per actor, sup_{t<=T} |U^N(a) - U(a)|
  double mean_sup_error = 0.0;
  int n_actors = 0;
  std::uint64_t seed = 0;
  int replica = 0;
  std::uint64_t finite_total_jumps = 0;
  std::vector<std::uint64_t> finite_jump_counts;
  double dominating_rate = 0.0;
  int rate_raises = 0;
  double finite_bound_violation = 0.0;  // excess over L + h Z/N (0 = clean)
  double limit_bound_violation = 0.0;   // excess over gamma_T (0 = clean)
};

struct CoupledRunOptions {
  double safety_factor = 2.0;
  int max_rate_raises = 6;
  // Drive the limit dynamics on both sides (identical laws and streams);
  // every sup error must come out exactly 0.
  bool self_coupling = false;
};

// The coupled construction: the finite system and N limit-equation copies
// driven through identical candidate streams per (actor, opinion), with
// shared initial pressures. Sup errors are tracked exactly (the difference
// process is piecewise monotone between accepted events and flow-direction
// changes, and both endpoints of every such piece are inspected).
CouplingResult coupled_run(const ModelParams& params, const DriftCurve& drift,
                           int replica = 0, const CoupledRunOptions& options = {});

struct ErrorCurveRow {
  int n_actors = 0;
  double mean_sup_error = 0.0;
  double std_error = 0.0;
  int replicas = 0;
};

std::vector<ErrorCurveRow> strong_error_curve(
    const RateFunction& rate, double h, const InitialCondition& initial,
    double horizon, const std::vector<int>& actor_counts, int replicas,
    std::uint64_t seed, const DriftCurve& drift, int workers = 1);

// Least squares of log(mean error) against log(N); the slope estimates the
// strong convergence exponent.
LineFit fit_rate(const std::vector<ErrorCurveRow>& rows);

}  // namespace opdyn

#endif  // OPDYN_COUPLING_HPP
