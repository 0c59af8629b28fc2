#include "opdyn/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <stdexcept>

#include "opdyn/parallel.hpp"

namespace opdyn {

SharedPoissonStream::SharedPoissonStream(std::uint64_t seed,
                                         std::uint64_t replica, int actor,
                                         int opinion,
                                         const std::vector<double>& schedule)
    : seed_(seed), replica_(replica), actor_(actor), opinion_(opinion) {
  if (schedule.empty())
    throw std::invalid_argument("SharedPoissonStream: empty rate schedule");
  double lo = 0.0;
  for (std::size_t j = 0; j < schedule.size(); ++j) {
    if (!(schedule[j] > lo))
      throw std::invalid_argument("SharedPoissonStream: schedule not increasing");
    layers_.push_back(Layer{lo, schedule[j], make_rng(static_cast<int>(j)),
                            Candidate{0.0, 0.0}});
    lo = schedule[j];
  }
  reset();
}

PhiloxRng SharedPoissonStream::make_rng(int layer_index) const {
  const std::uint64_t opinion_bit = (opinion_ > 0) ? 1 : 0;
  return PhiloxRng(seed_,
                   stream_id(StreamPurpose::coupling_candidates, replica_,
                             static_cast<std::uint64_t>(actor_),
                             (static_cast<std::uint64_t>(layer_index) << 1) |
                                 opinion_bit));
}

void SharedPoissonStream::draw_layer(Layer& layer) {
  layer.next.time += layer.rng.exponential(layer.z_hi - layer.z_lo);
  layer.next.z = layer.rng.uniform(layer.z_lo, layer.z_hi);
}

void SharedPoissonStream::refresh() {
  std::size_t best = 0;
  for (std::size_t j = 1; j < layers_.size(); ++j) {
    if (layers_[j].next.time < layers_[best].next.time) best = j;
  }
  next_layer_ = best;
  next_ = layers_[best].next;
}

void SharedPoissonStream::reset() {
  for (std::size_t j = 0; j < layers_.size(); ++j) {
    layers_[j].rng = make_rng(static_cast<int>(j));
    layers_[j].next = Candidate{0.0, 0.0};
    draw_layer(layers_[j]);
  }
  refresh();
}

void SharedPoissonStream::advance() {
  draw_layer(layers_[next_layer_]);
  refresh();
}

namespace {

struct AttemptOutcome {
  bool breached = false;
  CouplingResult result;
};

// One pass of the coupled construction at a fixed dominating-rate schedule.
// Error bookkeeping: for actor a between its own accepted events,
//   U^N_a(t) - U_a(t) = c_a + W(t),
// where W(t) = S(t) - I(t) is global (S = accumulated h/N shifts, I = flow
// integral) and c_a changes only at a's events. Tracking W's running extremes
// per actor therefore yields the exact sup of |c_a + W| over each interval:
// W is monotone between accepted events and flow-direction changes.
AttemptOutcome run_attempt(const ModelParams& params, const DriftCurve& drift,
                           int replica, const CoupledRunOptions& options,
                           const std::vector<double>& rate_schedule,
                           double gamma_horizon) {
  const int n = params.n_actors;
  const double h = params.h;
  const double big_t = params.horizon;
  const RateFunction& rate = params.rate;
  const double lambda = rate_schedule.back();
  const bool self = options.self_coupling;

  AttemptOutcome out;
  CouplingResult& res = out.result;
  res.n_actors = n;
  res.seed = params.seed;
  res.replica = replica;
  res.dominating_rate = lambda;
  res.rate_raises = static_cast<int>(rate_schedule.size()) - 1;

  PhiloxRng init_rng(params.seed,
                     stream_id(StreamPurpose::coupling_init, replica));
  const std::vector<double> u0 = params.initial.sample(n, init_rng);
  const double support = params.initial.support_bound();

  // Finite side (or second limit-copy set under self-coupling).
  std::vector<double> base = u0;
  double shift = 0.0;
  std::multiset<double> base_sorted(base.begin(), base.end());
  std::vector<std::uint64_t> jump_counts(n, 0);
  std::uint64_t total_jumps = 0;
  std::vector<double> fin2_value = u0;    // self-coupling state
  std::vector<double> fin2_anchor(n, 0.0);

  // Limit side: value at last reset and flow anchor I(reset time).
  std::vector<double> lim_value = u0;
  std::vector<double> lim_anchor(n, 0.0);

  // Error tracking.
  std::vector<double> c(n, 0.0), wmax(n, 0.0), wmin(n, 0.0), sup(n, 0.0);

  const std::vector<double> vertices = drift.sign_change_times();
  std::size_t vidx = 0;

  const auto flow_at = [&](double t) { return h * drift.cumulative(t); };
  const auto w_at = [&](double t) { return self ? 0.0 : shift - flow_at(t); };
  const auto update_all_extremes = [&](double w) {
    for (int b = 0; b < n; ++b) {
      wmax[b] = std::max(wmax[b], w);
      wmin[b] = std::min(wmin[b], w);
    }
  };
  const auto consume_vertices = [&](double upto) {
    if (self) {
      vidx = vertices.size();
      return;
    }
    while (vidx < vertices.size() && vertices[vidx] < upto) {
      update_all_extremes(w_at(vertices[vidx]));
      ++vidx;
    }
  };
  const auto close_interval = [&](int a) {
    sup[a] = std::max(sup[a], std::max(std::abs(c[a] + wmax[a]),
                                       std::abs(c[a] + wmin[a])));
  };

  std::vector<SharedPoissonStream> streams;
  streams.reserve(2 * n);
  for (int a = 0; a < n; ++a) {
    for (int o : {+1, -1})
      streams.emplace_back(params.seed, replica, a, o, rate_schedule);
  }

  using HeapItem = std::pair<double, int>;  // (candidate time, stream index)
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<HeapItem>>
      heap;
  for (int s = 0; s < 2 * n; ++s) heap.push({streams[s].peek().time, s});

  const auto finite_rate_check = [&]() -> bool {
    // The thinning is exact only while phi(+-u) <= lambda for every actor;
    // max |pressure| is tracked so the envelope M<(max|u|) can be compared.
    const double hi = *base_sorted.rbegin() + shift;
    const double lo = *base_sorted.begin() + shift;
    const double max_abs = std::max(std::abs(hi), std::abs(lo));
    return rate.m_less(std::min(max_abs, 700.0)) <= lambda * (1.0 + 1e-9);
  };

  while (!heap.empty()) {
    const auto [t, sidx] = heap.top();
    if (t > big_t) break;
    heap.pop();
    const double z = streams[sidx].peek().z;
    streams[sidx].advance();
    heap.push({streams[sidx].peek().time, sidx});

    const int actor = sidx / 2;
    const int opinion = (sidx % 2 == 0) ? +1 : -1;

    consume_vertices(t);
    const double flow_t = flow_at(t);

    // Finite-side acceptance.
    double finite_pressure;
    if (self) {
      finite_pressure = fin2_value[actor] + flow_t - fin2_anchor[actor];
    } else {
      finite_pressure = base[actor] + shift;
    }
    const double finite_intensity = rate.phi(opinion * finite_pressure);
    if (finite_intensity > lambda * (1.0 + 1e-9)) {
      out.breached = true;
      return out;
    }
    const bool accept_fin = z <= finite_intensity;

    // Limit-side acceptance.
    const double limit_pressure = lim_value[actor] + flow_t - lim_anchor[actor];
    const double limit_excess = std::abs(limit_pressure) - gamma_horizon;
    if (limit_excess > res.limit_bound_violation)
      res.limit_bound_violation = limit_excess;
    const double limit_intensity = rate.phi(opinion * limit_pressure);
    if (limit_intensity > lambda * (1.0 + 1e-9)) {
      out.breached = true;
      return out;
    }
    const bool accept_lim = z <= limit_intensity;

    if (!accept_fin && !accept_lim) continue;

    const double w_pre = self ? 0.0 : (shift - flow_t);
    if (accept_fin && !self) {
      update_all_extremes(w_pre);
    } else {
      wmax[actor] = std::max(wmax[actor], w_pre);
      wmin[actor] = std::min(wmin[actor], w_pre);
    }
    close_interval(actor);

    if (accept_fin) {
      if (self) {
        fin2_value[actor] = 0.0;
        fin2_anchor[actor] = flow_t;
      } else {
        const double old_base = base[actor];
        shift += opinion * h / n;
        base[actor] = -shift;
        base_sorted.erase(base_sorted.find(old_base));
        base_sorted.insert(base[actor]);
        ++jump_counts[actor];
        ++total_jumps;
        const double bound =
            support + h * static_cast<double>(total_jumps) / n;
        const double hi = *base_sorted.rbegin() + shift;
        const double lo = *base_sorted.begin() + shift;
        const double excess = std::max(std::abs(hi), std::abs(lo)) - bound -
                              1e-9 * (1.0 + bound);
        if (excess > res.finite_bound_violation)
          res.finite_bound_violation = excess;
        if (!finite_rate_check()) {
          out.breached = true;
          return out;
        }
      }
    }
    if (accept_lim) {
      lim_value[actor] = 0.0;
      lim_anchor[actor] = flow_t;
    }

    const double w_post = self ? 0.0 : (shift - flow_t);
    if (self) {
      c[actor] = (fin2_value[actor] - fin2_anchor[actor]) -
                 (lim_value[actor] - lim_anchor[actor]);
    } else {
      c[actor] = base[actor] - (lim_value[actor] - lim_anchor[actor]);
    }
    wmax[actor] = w_post;
    wmin[actor] = w_post;
    if (accept_fin && !self) update_all_extremes(w_post);
  }

  consume_vertices(big_t);
  const double w_final = w_at(big_t);
  update_all_extremes(w_final);
  for (int a = 0; a < n; ++a) close_interval(a);

  res.sup_errors = sup;
  res.mean_sup_error = mean_of(sup);
  res.finite_total_jumps = total_jumps;
  res.finite_jump_counts = std::move(jump_counts);
  return out;
}

}  // namespace

CouplingResult coupled_run(const ModelParams& params, const DriftCurve& drift,
                           int replica, const CoupledRunOptions& options) {
  params.validate();
  if (drift.horizon() < params.horizon * (1.0 - 1e-12))
    throw std::invalid_argument("coupled_run: drift must cover the horizon");

  const double support = params.initial.support_bound();
  const double gamma_horizon =
      apriori_gamma(support, params.horizon, params.h, params.rate);
  // High-probability cap on Z_T/N from the jump-count domination, with slack
  // for the Poisson fluctuations at small N.
  const double per_actor =
      1.0 + 2.0 * params.horizon * params.rate.m_less(2.0 * params.h);
  const double z_cap =
      per_actor + 8.0 * std::sqrt(per_actor / params.n_actors) +
      8.0 / params.n_actors;
  const double finite_reach = support + params.h * z_cap;
  const double base_rate =
      options.safety_factor *
      params.rate.m_less(std::min(std::max(gamma_horizon, finite_reach), 700.0));

  std::vector<double> schedule{base_rate};
  for (int attempt = 0; attempt <= options.max_rate_raises; ++attempt) {
    AttemptOutcome out =
        run_attempt(params, drift, replica, options, schedule, gamma_horizon);
    if (!out.breached) return out.result;
    schedule.push_back(schedule.back() * 2.0);
  }
  throw std::runtime_error(
      "coupled_run: dominating rate breached after adaptive raises");
}

std::vector<ErrorCurveRow> strong_error_curve(
    const RateFunction& rate, double h, const InitialCondition& initial,
    double horizon, const std::vector<int>& actor_counts, int replicas,
    std::uint64_t seed, const DriftCurve& drift, int workers) {
  if (actor_counts.size() < 2)
    throw std::invalid_argument("strong_error_curve: need >= 2 actor counts");
  for (int n : actor_counts) {
    if (n < 10)
      throw std::invalid_argument("strong_error_curve: actor counts must be >= 10");
  }
  if (replicas < 1)
    throw std::invalid_argument("strong_error_curve: need replicas >= 1");

  std::vector<ErrorCurveRow> rows;
  int replica_offset = 0;
  for (int n : actor_counts) {
    ModelParams params;
    params.n_actors = n;
    params.h = h;
    params.rate = rate;
    params.horizon = horizon;
    params.seed = seed;
    params.initial = initial;

    std::vector<double> means(replicas);
    parallel_for(replicas, workers, [&](int r) {
      const CouplingResult res =
          coupled_run(params, drift, replica_offset + r);
      means[r] = res.mean_sup_error;
    });
    ErrorCurveRow row;
    row.n_actors = n;
    row.mean_sup_error = mean_of(means);
    row.std_error = sample_sd(means) / std::sqrt(static_cast<double>(replicas));
    row.replicas = replicas;
    rows.push_back(row);
    replica_offset += replicas;
  }
  return rows;
}

LineFit fit_rate(const std::vector<ErrorCurveRow>& rows) {
  if (rows.size() < 2)
    throw std::invalid_argument("fit_rate: need at least two rows");
  std::vector<double> log_n, log_e;
  for (const auto& row : rows) {
    if (!(row.mean_sup_error > 0.0))
      throw std::invalid_argument(
          "fit_rate: nonpositive error (degenerate self-coupling input?)");
    log_n.push_back(std::log(static_cast<double>(row.n_actors)));
    log_e.push_back(std::log(row.mean_sup_error));
  }
  return fit_line(log_n, log_e);
}

}  // namespace opdyn
