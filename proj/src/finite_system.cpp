#include "opdyn/finite_system.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "opdyn/parallel.hpp"
#include "opdyn/quadrature.hpp"
#include "opdyn/stats.hpp"

namespace opdyn {

InitialCondition InitialCondition::constant(double c) {
  return InitialCondition(Kind::constant, std::abs(c), {c});
}

InitialCondition InitialCondition::iid_uniform(double support) {
  if (!(support >= 0.0))
    throw std::invalid_argument("iid_uniform: support bound must be >= 0");
  return InitialCondition(Kind::iid_uniform, support, {});
}

InitialCondition InitialCondition::iid_two_point(double support) {
  if (!(support >= 0.0))
    throw std::invalid_argument("iid_two_point: support bound must be >= 0");
  return InitialCondition(Kind::iid_two_point, support, {});
}

InitialCondition InitialCondition::custom(std::vector<double> pressures) {
  if (pressures.empty())
    throw std::invalid_argument("custom initial condition: empty list");
  double support = 0.0;
  for (double u : pressures) support = std::max(support, std::abs(u));
  return InitialCondition(Kind::custom, support, std::move(pressures));
}

std::vector<double> InitialCondition::sample(int n, PhiloxRng& rng) const {
  std::vector<double> out(n);
  switch (kind_) {
    case Kind::constant:
      std::fill(out.begin(), out.end(), values_[0]);
      break;
    case Kind::iid_uniform:
      for (double& u : out) u = support_ * (2.0 * rng.uniform01() - 1.0);
      break;
    case Kind::iid_two_point:
      for (double& u : out)
        u = (rng.next_u32() & 1u) ? support_ : -support_;
      break;
    case Kind::custom:
      if (static_cast<int>(values_.size()) != n)
        throw std::invalid_argument(
            "custom initial condition: list length != N");
      out = values_;
      break;
  }
  return out;
}

std::vector<double> InitialCondition::sample_iid(int m, PhiloxRng& rng) const {
  if (kind_ != Kind::custom) return sample(m, rng);
  std::vector<double> out(m);
  for (double& u : out)
    u = values_[rng.uniform_below(values_.size())];
  return out;
}

std::string InitialCondition::describe() const {
  switch (kind_) {
    case Kind::constant:
      return "constant:" + std::to_string(values_[0]);
    case Kind::iid_uniform:
      return "uniform:" + std::to_string(support_);
    case Kind::iid_two_point:
      return "two_point:" + std::to_string(support_);
    case Kind::custom:
      return "custom[" + std::to_string(values_.size()) + "]";
  }
  return "?";
}

void ModelParams::validate() const {
  if (n_actors < 2) throw std::invalid_argument("model: N must be >= 2");
  if (!(h > 0.0)) throw std::invalid_argument("model: h must be > 0");
  if (!(horizon > 0.0)) throw std::invalid_argument("model: T must be > 0");
}

SystemState::SystemState(std::vector<double> pressures, bool track_extremes)
    : base_(std::move(pressures)),
      jump_counts_(base_.size(), 0),
      track_extremes_(track_extremes) {
  for (double u : base_) base_sum_ += u;
  if (track_extremes_) base_sorted_.insert(base_.begin(), base_.end());
}

std::vector<double> SystemState::pressures() const {
  std::vector<double> out(base_.size());
  for (std::size_t a = 0; a < base_.size(); ++a) out[a] = base_[a] + shift_;
  return out;
}

double SystemState::max_abs_pressure() const {
  if (track_extremes_) {
    const double hi = *base_sorted_.rbegin() + shift_;
    const double lo = *base_sorted_.begin() + shift_;
    return std::max(std::abs(hi), std::abs(lo));
  }
  double m = 0.0;
  for (double b : base_) m = std::max(m, std::abs(b + shift_));
  return m;
}

void SystemState::apply_opinion(int actor, int opinion, double h) {
  const int n = size();
  const double old_base = base_[actor];
  shift_ += opinion * h / n;
  const double new_base = -shift_;  // acting actor's pressure becomes exactly 0
  base_[actor] = new_base;
  base_sum_ += new_base - old_base;
  if (track_extremes_) {
    base_sorted_.erase(base_sorted_.find(old_base));
    base_sorted_.insert(new_base);
  }
  ++jump_counts_[actor];
  ++total_jumps_;
}

double total_rate(const SystemState& state, const RateFunction& rate) {
  if (rate.odd_plus_constant()) {
    // big_phi is identically 2B: the total rate never depends on the state.
    return 2.0 * rate.offset() * state.size();
  }
  double sum = 0.0;
  for (int a = 0; a < state.size(); ++a) {
    const auto [plus, minus] = rate.phi_pair(state.pressure(a));
    sum += plus + minus;
  }
  return sum;
}

namespace {

struct Selection {
  int actor;
  int opinion;
};

Selection select_event(const SystemState& state, const RateFunction& rate,
                       PhiloxRng& rng, std::vector<double>& scratch) {
  const int n = state.size();
  if (rate.odd_plus_constant()) {
    // Constant per-actor rate 2B: pick the actor uniformly, then the opinion
    // with probability phi(+u)/2B.
    const int actor = static_cast<int>(rng.uniform_below(n));
    const double two_b = 2.0 * rate.offset();
    const double u = rng.uniform01() * two_b;
    const int opinion = (u < rate.phi(state.pressure(actor))) ? +1 : -1;
    return {actor, opinion};
  }
  scratch.resize(2 * n);
  double total = 0.0;
  for (int a = 0; a < n; ++a) {
    const auto [plus, minus] = rate.phi_pair(state.pressure(a));
    total += plus;
    scratch[2 * a] = total;
    total += minus;
    scratch[2 * a + 1] = total;
  }
  const double v = rng.uniform01() * total;
  const auto it = std::upper_bound(scratch.begin(), scratch.end(), v);
  int idx = static_cast<int>(it - scratch.begin());
  if (idx >= 2 * n) idx = 2 * n - 1;
  return {idx / 2, (idx % 2 == 0) ? +1 : -1};
}

}  // namespace

std::optional<EventRecord> step(SystemState& state, const RateFunction& rate,
                                double h, PhiloxRng& rng) {
  const double total = total_rate(state, rate);
  if (!(total > 0.0)) return std::nullopt;
  const double wait = rng.exponential(total);
  state.advance_time(wait);
  std::vector<double> scratch;
  const Selection sel = select_event(state, rate, rng, scratch);
  state.apply_opinion(sel.actor, sel.opinion, h);
  return EventRecord{state.time(), sel.actor, sel.opinion};
}

Trajectory simulate(const ModelParams& params, const SimulateOptions& options) {
  params.validate();
  if (options.grid_points < 2)
    throw std::invalid_argument("simulate: need at least 2 grid points");

  PhiloxRng init_rng(params.seed,
                     stream_id(StreamPurpose::finite_init, options.replica));
  PhiloxRng rng(params.seed,
                stream_id(StreamPurpose::finite_replica, options.replica));

  const int n = params.n_actors;
  const double big_t = params.horizon;
  const double support = params.initial.support_bound();
  SystemState state(params.initial.sample(n, init_rng),
                    options.check_pathwise_bound);

  Trajectory traj;
  traj.grid.reserve(options.grid_points);
  const int grid_points = options.grid_points;
  auto grid_time = [&](int i) {
    return big_t * static_cast<double>(i) / (grid_points - 1);
  };

  auto record_grid = [&](int i) {
    GridSample g;
    g.t = grid_time(i);
    g.mean_pressure = state.pressure_sum() / n;
    g.total_jumps = state.total_jumps();
    traj.grid.push_back(g);
    if (options.record_actor_pressures) traj.actor_rows.push_back(state.pressures());
    if (options.record_phi_means) {
      double sp = 0.0, sm = 0.0;
      for (int a = 0; a < n; ++a) {
        const auto [plus, minus] = params.rate.phi_pair(state.pressure(a));
        sp += plus;
        sm += minus;
      }
      traj.phi_plus_mean.push_back(sp / n);
      traj.phi_minus_mean.push_back(sm / n);
    }
  };

  auto check_bound = [&] {
    if (!options.check_pathwise_bound) return;
    const double bound =
        support + params.h * static_cast<double>(state.total_jumps()) / n;
    const double excess =
        state.max_abs_pressure() - bound - 1e-9 * (1.0 + bound);
    if (excess > traj.bound_violation) traj.bound_violation = excess;
  };
  check_bound();

  std::vector<double> scratch;
  int next_grid = 0;
  double last_event_time = -1.0;
  for (;;) {
    const double total = total_rate(state, params.rate);
    if (!(total > 0.0)) {
      traj.halted = true;
      traj.halt_time = state.time();
      while (next_grid < grid_points) record_grid(next_grid++);
      break;
    }
    const double wait = rng.exponential(total);
    const double t_next = state.time() + wait;
    // Grid observables are left limits: sample the pre-event state.
    while (next_grid < grid_points && grid_time(next_grid) <= t_next)
      record_grid(next_grid++);
    if (next_grid >= grid_points) break;
    state.advance_time(wait);
    const Selection sel = select_event(state, params.rate, rng, scratch);
    state.apply_opinion(sel.actor, sel.opinion, params.h);
    if (!(t_next > last_event_time))
      throw std::logic_error("simulate: event times not strictly increasing");
    last_event_time = t_next;
    if (options.record_events)
      traj.events.push_back({t_next, sel.actor, sel.opinion});
    check_bound();
  }
  traj.final_jump_counts = state.jump_counts();
  return traj;
}

DominanceReport check_jump_dominance(const ModelParams& params, int replicas,
                                     int workers) {
  if (replicas < 100)
    throw std::invalid_argument("check_jump_dominance: need >= 100 replicas");
  DominanceReport report;
  report.replicas = replicas;
  if (params.horizon == 0.0) {
    report.degenerate = true;
    return report;
  }
  params.validate();

  std::vector<double> z_total(replicas);
  std::vector<double> z_actor0(replicas);
  parallel_for(replicas, workers, [&](int r) {
    SimulateOptions o;
    o.grid_points = 2;
    o.replica = r;
    const Trajectory t = simulate(params, o);
    z_total[r] = static_cast<double>(t.grid.back().total_jumps);
    z_actor0[r] = static_cast<double>(t.final_jump_counts[0]);
  });

  std::vector<double> sorted = z_total;
  std::sort(sorted.begin(), sorted.end());
  const double lambda =
      params.horizon * params.n_actors * params.rate.m_less(2.0 * params.h);
  const double r_count = static_cast<double>(replicas);
  for (int d = 1; d <= 9; ++d) {
    const std::size_t idx = static_cast<std::size_t>(
        0.1 * d * static_cast<double>(replicas - 1));
    DecileRow row;
    row.quantile = sorted[idx];
    double above = 0.0;
    for (double z : z_total)
      if (z > row.quantile) above += 1.0;
    row.empirical_sf = above / r_count;
    const long long k = static_cast<long long>(
        std::floor((row.quantile - params.n_actors) / 2.0));
    row.bound_sf = poisson_sf(k, lambda);
    const double se =
        std::sqrt(row.empirical_sf * (1.0 - row.empirical_sf) / r_count);
    row.margin = row.bound_sf + 3.0 * se - row.empirical_sf;
    if (row.margin < 0.0) report.decile_pass = false;
    report.rows.push_back(row);
  }

  report.mean_jumps_per_actor = mean_of(z_actor0);
  report.mean_bound =
      1.0 + 2.0 * params.horizon * params.rate.m_less(2.0 * params.h);
  report.mean_std_error = sample_sd(z_actor0) / std::sqrt(r_count);
  report.mean_pass = report.mean_jumps_per_actor <=
                     report.mean_bound + 3.0 * report.mean_std_error;
  return report;
}

std::optional<double> initial_free_bound_diagnostic(const RateFunction& rate,
                                                    double t, double s,
                                                    double h) {
  if (!(t > 0.0) || !(s > 0.0) || !(s < t))
    throw std::invalid_argument("initial_free_bound: need 0 < s < t");
  if (!rate.m_greater_diverges()) return std::nullopt;
  const double delta = t - s;
  const auto integrand = [&](double y) {
    const auto inv = rate.m_greater_inverse(y);
    return (inv ? *inv : 0.0) * delta * std::exp(-delta * y);
  };
  const ImproperResult quad = integrate_to_infinity(integrand, 0.0, 1e-10);
  if (!quad.converged) return std::nullopt;
  return quad.value + h + h * delta * rate.m_less(2.0 * h);
}

}  // namespace opdyn
