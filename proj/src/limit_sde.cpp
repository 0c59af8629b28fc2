#include "opdyn/limit_sde.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "opdyn/csv.hpp"
#include "opdyn/parallel.hpp"

namespace opdyn {

DriftCurve::DriftCurve(double horizon, int cells)
    : horizon_(horizon),
      cells_(cells),
      dt_(horizon / cells),
      a_plus_(cells + 1, 0.0),
      a_minus_(cells + 1, 0.0),
      cum_(cells + 1, 0.0) {
  if (!(horizon > 0.0) || cells < 1)
    throw std::invalid_argument("DriftCurve: bad horizon or cell count");
}

DriftCurve DriftCurve::from_columns(const std::vector<double>& times,
                                    const std::vector<double>& a_plus,
                                    const std::vector<double>& a_minus) {
  if (times.size() < 2 || times.size() != a_plus.size() ||
      times.size() != a_minus.size())
    throw std::invalid_argument("DriftCurve: inconsistent columns");
  const int cells = static_cast<int>(times.size()) - 1;
  DriftCurve curve(times.back(), cells);
  const double dt = curve.dt();
  for (int k = 0; k <= cells; ++k) {
    if (std::abs(times[k] - dt * k) > 1e-9 * (1.0 + times.back()))
      throw std::invalid_argument("DriftCurve: grid must be uniform");
    curve.set_node(k, a_plus[k], a_minus[k]);
  }
  curve.finalize();
  return curve;
}

void DriftCurve::check_node(int k) const {
  if (k < 0 || k > cells_) throw std::out_of_range("DriftCurve: node index");
}

void DriftCurve::set_node(int k, double a_plus, double a_minus) {
  check_node(k);
  if (a_plus < 0.0 || a_minus < 0.0)
    throw std::invalid_argument("DriftCurve: negative intensity estimate");
  a_plus_[k] = a_plus;
  a_minus_[k] = a_minus;
  finalized_ = false;
}

void DriftCurve::finalize() {
  cum_[0] = 0.0;
  for (int k = 0; k < cells_; ++k) {
    const double d0 = a_plus_[k] - a_minus_[k];
    const double d1 = a_plus_[k + 1] - a_minus_[k + 1];
    cum_[k + 1] = cum_[k] + 0.5 * (d0 + d1) * dt_;
  }
  finalized_ = true;
}

double DriftCurve::a_plus(double t) const {
  if (t <= 0.0) return a_plus_.front();
  if (t >= horizon_) return a_plus_.back();
  const int k = std::min(static_cast<int>(t / dt_), cells_ - 1);
  const double w = (t - dt_ * k) / dt_;
  return a_plus_[k] + (a_plus_[k + 1] - a_plus_[k]) * w;
}

double DriftCurve::a_minus(double t) const {
  if (t <= 0.0) return a_minus_.front();
  if (t >= horizon_) return a_minus_.back();
  const int k = std::min(static_cast<int>(t / dt_), cells_ - 1);
  const double w = (t - dt_ * k) / dt_;
  return a_minus_[k] + (a_minus_[k + 1] - a_minus_[k]) * w;
}

double DriftCurve::difference(double t) const { return a_plus(t) - a_minus(t); }

double DriftCurve::cumulative(double t) const {
  if (!finalized_) throw std::logic_error("DriftCurve: finalize() first");
  if (t <= 0.0) return 0.0;
  if (t >= horizon_) return cum_.back();
  const int k = std::min(static_cast<int>(t / dt_), cells_ - 1);
  const double tau = t - dt_ * k;
  const double d0 = a_plus_[k] - a_minus_[k];
  const double d1 = a_plus_[k + 1] - a_minus_[k + 1];
  return cum_[k] + d0 * tau + (d1 - d0) * tau * tau / (2.0 * dt_);
}

std::vector<double> DriftCurve::sign_change_times() const {
  std::vector<double> out;
  for (int k = 0; k < cells_; ++k) {
    const double d0 = a_plus_[k] - a_minus_[k];
    const double d1 = a_plus_[k + 1] - a_minus_[k + 1];
    if (d0 == 0.0 && k > 0) out.push_back(dt_ * k);
    if (d0 * d1 < 0.0) out.push_back(dt_ * k + dt_ * d0 / (d0 - d1));
  }
  return out;
}

void DriftCurve::write_csv(std::ostream& os) const {
  os << "t,a_plus,a_minus\n";
  for (int k = 0; k <= cells_; ++k) {
    os << format_g17(node_time(k)) << ',' << format_g17(a_plus_[k]) << ','
       << format_g17(a_minus_[k]) << '\n';
  }
}

DriftCurve DriftCurve::read_csv(std::istream& is) {
  std::vector<double> t, ap, am;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    std::istringstream row(line);
    std::string field;
    double vals[3];
    for (int i = 0; i < 3; ++i) {
      if (!std::getline(row, field, ','))
        throw std::invalid_argument("drift csv: malformed row: " + line);
      vals[i] = std::stod(field);
    }
    t.push_back(vals[0]);
    ap.push_back(vals[1]);
    am.push_back(vals[2]);
  }
  return from_columns(t, ap, am);
}

double apriori_gamma(double support_bound, double t, double h,
                     const RateFunction& rate) {
  if (t < 0.0) throw std::invalid_argument("apriori_gamma: t must be >= 0");
  return 2.0 * support_bound + 2.0 * h * t * rate.m_less(2.0 * h);
}

ContractionReport contraction_report(const RateFunction& rate, double h,
                                     double support_bound, double horizon) {
  const double r = apriori_gamma(support_bound, horizon, h, rate);
  const double k_bound = rate.m_less(r);
  const double c_lip = rate.lipschitz_bound(r);
  const double c_t = 2.0 * (support_bound + 2.0 * h * k_bound * horizon) * c_lip;
  const auto c = [&](double t) {
    return 2.0 * h * c_lip * t * std::exp(t * c_t);
  };
  ContractionReport report;
  if (c(horizon) < 1.0) {
    report.t_star = horizon;
    report.c_at_t_star = c(horizon);
    return report;
  }
  double lo = 0.0, hi = horizon;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (c(mid) < 1.0)
      lo = mid;
    else
      hi = mid;
  }
  report.t_star = lo;
  report.c_at_t_star = c(lo);
  return report;
}

namespace {

struct ClampedRate {
  const RateFunction& rate;
  double radius;
  std::uint64_t clamp_hits = 0;

  std::pair<double, double> pair(double u) {
    double c = u;
    if (c > radius) {
      c = radius;
      ++clamp_hits;
    } else if (c < -radius) {
      c = -radius;
      ++clamp_hits;
    }
    return rate.phi_pair(c);
  }
};

}  // namespace

LimitWalkStats walk_limit_path(const RateFunction& rate, double h,
                               const DriftCurve& drift, double u0,
                               double t_start, double t_end,
                               double truncation_radius, PhiloxRng& rng,
                               std::vector<double>& jump_times,
                               std::span<const double> flow_vertices) {
  if (t_end > drift.horizon() * (1.0 + 1e-12))
    throw std::invalid_argument("walk_limit_path: drift does not cover horizon");

  LimitWalkStats st;
  ClampedRate clamped{rate, truncation_radius};
  double u_e = u0;
  double flow_e = h * drift.cumulative(t_start);
  const auto value_at = [&](double t) {
    return u_e + h * drift.cumulative(t) - flow_e;
  };
  st.sup_abs = std::abs(u0);

  std::size_t vidx = 0;
  while (vidx < flow_vertices.size() && flow_vertices[vidx] <= t_start) ++vidx;
  const auto consume_vertices = [&](double upto) {
    while (vidx < flow_vertices.size() && flow_vertices[vidx] < upto) {
      st.sup_abs =
          std::max(st.sup_abs, std::abs(value_at(flow_vertices[vidx])));
      ++vidx;
    }
  };

  const auto try_candidate = [&](double t, double lambda) {
    ++st.candidates;
    const double u = value_at(t);
    st.sup_abs = std::max(st.sup_abs, std::abs(u));
    const auto [p_plus, p_minus] = clamped.pair(u);
    const double total = p_plus + p_minus;
    if (total > lambda * (1.0 + 1e-9))
      throw std::logic_error(
          "walk_limit_path: dominating rate breached (a priori bound bug)");
    const double z = rng.uniform(0.0, lambda);
    // z <= phi(+u): +1 mark; phi(+u) < z <= Phi(u): -1 mark. Both reset.
    if (z <= total) {
      ++st.jumps;
      jump_times.push_back(t);
      u_e = 0.0;
      flow_e = h * drift.cumulative(t);
    }
  };

  if (rate.odd_plus_constant()) {
    // big_phi is identically 2B; a single global dominating rate is exact.
    const double lambda = 2.0 * rate.offset();
    double t = t_start;
    for (;;) {
      t += rng.exponential(lambda);
      if (t >= t_end) break;
      consume_vertices(t);
      try_candidate(t, lambda);
    }
  } else {
    // Dominating rate refreshed per drift cell from the reachable |u| range
    // (exact by memorylessness; keeps exponential-family rates realistic).
    const double grid_dt = drift.dt();
    double t = t_start;
    while (t < t_end) {
      int cell = std::min(static_cast<int>(t / grid_dt), drift.cells() - 1);
      double cell_end = std::min(t_end, drift.node_time(cell + 1));
      if (cell_end <= t) {
        cell = std::min(cell + 1, drift.cells() - 1);
        cell_end = std::min(t_end, drift.node_time(cell + 1));
        if (cell_end <= t) break;
      }
      const double f_now = h * drift.cumulative(t);
      double f_min = 0.0, f_max = 0.0;
      const double f_end = h * drift.cumulative(cell_end) - f_now;
      f_min = std::min(f_min, f_end);
      f_max = std::max(f_max, f_end);
      for (std::size_t j = vidx;
           j < flow_vertices.size() && flow_vertices[j] < cell_end; ++j) {
        if (flow_vertices[j] <= t) continue;
        const double fv = h * drift.cumulative(flow_vertices[j]) - f_now;
        f_min = std::min(f_min, fv);
        f_max = std::max(f_max, fv);
      }
      const double u_now = value_at(t);
      const double reach = std::max(
          {std::abs(u_now + f_min), std::abs(u_now + f_max), f_max - f_min});
      const double lambda =
          rate.m_less(std::min(reach, truncation_radius)) * (1.0 + 1e-12);
      const double tau = t + rng.exponential(lambda);
      if (tau >= cell_end) {
        consume_vertices(cell_end);
        st.sup_abs = std::max(st.sup_abs, std::abs(value_at(cell_end)));
        t = cell_end;
        continue;
      }
      consume_vertices(tau);
      try_candidate(tau, lambda);
      t = tau;
    }
  }

  consume_vertices(t_end);
  st.final_value = value_at(t_end);
  st.sup_abs = std::max(st.sup_abs, std::abs(st.final_value));
  st.clamp_hits = clamped.clamp_hits;
  return st;
}

double LimitPath::value_at(double t) const {
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  if (it == jump_times.begin())
    return u0 + h * drift->cumulative(t);
  const double anchor = *(it - 1);
  return h * (drift->cumulative(t) - drift->cumulative(anchor));
}

LimitPath sample_limit_path(const RateFunction& rate, double h,
                            const DriftCurve& drift, double u0, PhiloxRng& rng,
                            double horizon, double truncation_radius) {
  LimitPath path;
  path.u0 = u0;
  path.h = h;
  path.drift = &drift;
  path.horizon = horizon;
  const std::vector<double> vertices = drift.sign_change_times();
  const LimitWalkStats st =
      walk_limit_path(rate, h, drift, u0, 0.0, horizon, truncation_radius, rng,
                      path.jump_times, vertices);
  path.recorded_sup_abs = st.sup_abs;
  return path;
}

namespace {

// One Picard sweep = M paths against the current curve, node estimates from
// sample means. Chunked accumulation with a fixed chunk size keeps the
// reduction order independent of the worker count.
class PicardDriver {
 public:
  PicardDriver(const RateFunction& rate, double h, double horizon, int cells,
               double trunc_radius, const PicardConfig& cfg, std::uint64_t seed,
               std::vector<double> initial_values)
      : rate_(rate),
        h_(h),
        horizon_(horizon),
        cells_(cells),
        trunc_(trunc_radius),
        cfg_(cfg),
        seed_(seed),
        u0_(std::move(initial_values)) {}

  struct StallError {
    std::vector<double> residuals;
  };

  DriftCurve run(int window_count, PicardDiagnostics* diag);

 private:
  struct SweepSums {
    std::vector<double> sum_p, sum_m, sumsq_p, sumsq_m, sum_absphi;
    std::vector<double> final_values;
    double sup_abs = 0.0;
    std::uint64_t clamp_hits = 0;
    std::uint64_t jumps = 0;
  };

  SweepSums sweep(const DriftCurve& curve, int k_lo, int k_hi, double t0,
                  double t1, int window_index,
                  const std::vector<double>& starts, bool with_sq,
                  bool with_diagnostics) const;

  const RateFunction& rate_;
  double h_;
  double horizon_;
  int cells_;
  double trunc_;
  PicardConfig cfg_;
  std::uint64_t seed_;
  std::vector<double> u0_;
};

PicardDriver::SweepSums PicardDriver::sweep(
    const DriftCurve& curve, int k_lo, int k_hi, double t0, double t1,
    int window_index, const std::vector<double>& starts, bool with_sq,
    bool with_diagnostics) const {
  const int n_nodes = k_hi - k_lo + 1;
  const int m = static_cast<int>(starts.size());
  constexpr int kChunk = 1024;
  const int n_chunks = (m + kChunk - 1) / kChunk;
  const std::vector<double> vertices = curve.sign_change_times();
  const std::vector<double>& cum_nodes = curve.cumulative_nodes();
  const double dt = curve.dt();

  std::vector<SweepSums> chunk_sums(n_chunks);
  parallel_for(n_chunks, cfg_.workers, [&](int c) {
    SweepSums& s = chunk_sums[c];
    s.sum_p.assign(n_nodes, 0.0);
    s.sum_m.assign(n_nodes, 0.0);
    if (with_sq) {
      s.sumsq_p.assign(n_nodes, 0.0);
      s.sumsq_m.assign(n_nodes, 0.0);
    }
    if (with_diagnostics) s.sum_absphi.assign(n_nodes, 0.0);
    const int p_lo = c * kChunk;
    const int p_hi = std::min(m, p_lo + kChunk);
    s.final_values.resize(p_hi - p_lo);
    std::vector<double> jumps;
    ClampedRate clamped{rate_, trunc_};
    for (int p = p_lo; p < p_hi; ++p) {
      PhiloxRng rng(seed_, stream_id(StreamPurpose::picard_path, p, window_index));
      jumps.clear();
      const LimitWalkStats st =
          walk_limit_path(rate_, h_, curve, starts[p], t0, t1, trunc_, rng,
                          jumps, vertices);
      s.final_values[p - p_lo] = st.final_value;
      s.sup_abs = std::max(s.sup_abs, st.sup_abs);
      s.clamp_hits += st.clamp_hits;
      s.jumps += st.jumps;
      // Node sweep: left limits, so a node lands in the pre-jump segment.
      double u_e = starts[p];
      double flow_e = h_ * cum_nodes[k_lo];
      int k = k_lo;
      auto accumulate_to = [&](double stop) {
        while (k <= k_hi && dt * k < stop) {
          const double u = u_e + h_ * cum_nodes[k] - flow_e;
          const auto [pp, pm] = clamped.pair(u);
          const int i = k - k_lo;
          s.sum_p[i] += pp;
          s.sum_m[i] += pm;
          if (with_sq) {
            s.sumsq_p[i] += pp * pp;
            s.sumsq_m[i] += pm * pm;
          }
          if (with_diagnostics) s.sum_absphi[i] += std::abs(u) * (pp + pm);
          ++k;
        }
      };
      for (double tj : jumps) {
        accumulate_to(tj);
        u_e = 0.0;
        flow_e = h_ * curve.cumulative(tj);
      }
      accumulate_to(std::nextafter(t1, horizon_ + 1.0));  // include end node
    }
  });

  SweepSums total;
  total.sum_p.assign(n_nodes, 0.0);
  total.sum_m.assign(n_nodes, 0.0);
  if (with_sq) {
    total.sumsq_p.assign(n_nodes, 0.0);
    total.sumsq_m.assign(n_nodes, 0.0);
  }
  if (with_diagnostics) total.sum_absphi.assign(n_nodes, 0.0);
  total.final_values.resize(m);
  for (int c = 0; c < n_chunks; ++c) {
    const SweepSums& s = chunk_sums[c];
    for (int i = 0; i < n_nodes; ++i) {
      total.sum_p[i] += s.sum_p[i];
      total.sum_m[i] += s.sum_m[i];
      if (with_sq) {
        total.sumsq_p[i] += s.sumsq_p[i];
        total.sumsq_m[i] += s.sumsq_m[i];
      }
      if (with_diagnostics) total.sum_absphi[i] += s.sum_absphi[i];
    }
    std::copy(s.final_values.begin(), s.final_values.end(),
              total.final_values.begin() + c * kChunk);
    total.sup_abs = std::max(total.sup_abs, s.sup_abs);
    total.clamp_hits += s.clamp_hits;
    total.jumps += s.jumps;
  }
  return total;
}

DriftCurve PicardDriver::run(int window_count, PicardDiagnostics* diag) {
  const int m = static_cast<int>(u0_.size());
  DriftCurve curve(horizon_, cells_);

  // Window w covers nodes (boundary[w], boundary[w+1]]; boundaries on nodes.
  std::vector<int> boundary(window_count + 1);
  for (int w = 0; w <= window_count; ++w)
    boundary[w] = static_cast<int>(
        std::llround(static_cast<double>(cells_) * w / window_count));
  for (int w = 0; w < window_count; ++w) {
    if (boundary[w + 1] <= boundary[w])
      throw std::invalid_argument("picard: more windows than grid cells");
  }

  // Iteration zero: the constant curve E[phi(+-U_0)].
  double p0 = 0.0, m0 = 0.0;
  {
    ClampedRate clamped{rate_, trunc_};
    for (double u : u0_) {
      const auto [pp, pm] = clamped.pair(u);
      p0 += pp;
      m0 += pm;
    }
    p0 /= m;
    m0 /= m;
  }
  for (int k = 0; k <= cells_; ++k) curve.set_node(k, p0, m0);
  curve.finalize();

  std::vector<double> starts = u0_;
  std::vector<double> mean_absphi(cells_ + 1, 0.0);
  if (diag) {
    diag->window_residuals.clear();
    diag->windows_used = window_count;
    diag->max_curve_std_error = 0.0;
    diag->node_std_error.assign(cells_ + 1, 0.0);
    diag->clamp_hits = 0;
    diag->pathwise_sup = 0.0;
    diag->total_jumps = 0;
  }
  double tolerance_used = cfg_.tolerance;

  for (int w = 0; w < window_count; ++w) {
    const int k_lo = boundary[w];
    const int k_hi = boundary[w + 1];
    const double t0 = curve.node_time(k_lo);
    const double t1 = curve.node_time(k_hi);
    // Constant extension of the window-start value as the first guess.
    if (w > 0) {
      for (int k = k_lo + 1; k <= k_hi; ++k)
        curve.set_node(k, curve.a_plus_nodes()[k_lo],
                       curve.a_minus_nodes()[k_lo]);
      curve.finalize();
    }

    std::vector<double> residuals;
    double window_tol = cfg_.tolerance;
    bool converged = false;
    for (int iter = 1; iter <= cfg_.max_iterations; ++iter) {
      const bool first = (iter == 1);
      const SweepSums s =
          sweep(curve, k_lo, k_hi, t0, t1, w, starts, first, false);
      if (first) {
        double max_se = 0.0;
        for (int i = 0; i <= k_hi - k_lo; ++i) {
          const double mp = s.sum_p[i] / m;
          const double mm = s.sum_m[i] / m;
          const double vp = std::max(0.0, s.sumsq_p[i] / m - mp * mp);
          const double vm = std::max(0.0, s.sumsq_m[i] / m - mm * mm);
          const double se = std::sqrt(std::max(vp, vm) / m);
          max_se = std::max(max_se, se);
          if (diag) diag->node_std_error[k_lo + i] = se;
        }
        if (cfg_.tolerance <= 0.0) {
          // Auto tolerance: 5x the largest node standard error.
          window_tol = 5.0 * max_se;
          tolerance_used = std::max(tolerance_used, window_tol);
        }
        if (diag)
          diag->max_curve_std_error = std::max(diag->max_curve_std_error, max_se);
      }
      double residual = 0.0;
      for (int k = k_lo; k <= k_hi; ++k) {
        const int i = k - k_lo;
        residual = std::max(
            residual, std::abs(s.sum_p[i] / m - curve.a_plus_nodes()[k]));
        residual = std::max(
            residual, std::abs(s.sum_m[i] / m - curve.a_minus_nodes()[k]));
        curve.set_node(k, s.sum_p[i] / m, s.sum_m[i] / m);
      }
      curve.finalize();
      residuals.push_back(residual);
      if (residual <= window_tol) {
        converged = true;
        break;
      }
    }
    if (!converged) throw StallError{std::move(residuals)};

    // Confirmation pass with the converged curve: boundary states for the
    // next window plus diagnostics.
    const SweepSums fin =
        sweep(curve, k_lo, k_hi, t0, t1, w, starts, false, true);
    for (int k = k_lo; k <= k_hi; ++k) {
      const int i = k - k_lo;
      curve.set_node(k, fin.sum_p[i] / m, fin.sum_m[i] / m);
      mean_absphi[k] = fin.sum_absphi[i] / m;
    }
    curve.finalize();
    starts = fin.final_values;
    if (diag) {
      diag->window_residuals.push_back(std::move(residuals));
      diag->pathwise_sup = std::max(diag->pathwise_sup, fin.sup_abs);
      diag->clamp_hits += fin.clamp_hits;
      diag->total_jumps += fin.jumps;
    }
  }

  if (diag) {
    diag->tolerance_used = tolerance_used;
    diag->truncation_radius = trunc_;
    double integral = 0.0;
    for (int k = 0; k < cells_; ++k)
      integral += 0.5 * (mean_absphi[k] + mean_absphi[k + 1]) * curve.dt();
    diag->jump_size_integral = integral;
    double mean_abs_u0 = 0.0;
    for (double u : u0_) mean_abs_u0 += std::abs(u);
    mean_abs_u0 /= m;
    diag->jump_size_integral_bound =
        2.0 * mean_abs_u0 + 2.0 * h_ * horizon_ * rate_.m_less(2.0 * h_);
  }
  return curve;
}

}  // namespace

DriftCurve picard_solve(const RateFunction& rate, double h,
                        const InitialCondition& initial, double horizon,
                        const PicardConfig& config, std::uint64_t seed,
                        PicardDiagnostics* diagnostics) {
  if (config.sample_paths < 1000)
    throw std::invalid_argument("picard_solve: need at least 1000 paths");
  if (!(horizon > 0.0) || !(h > 0.0))
    throw std::invalid_argument("picard_solve: need positive h and horizon");

  const int cells = std::max(
      1, static_cast<int>(std::ceil(config.cells_per_unit_time * horizon)));
  const double support = initial.support_bound();
  const double trunc = apriori_gamma(support, horizon, h, rate);

  std::vector<double> u0(config.sample_paths);
  {
    PhiloxRng rng(seed, stream_id(StreamPurpose::picard_init));
    u0 = initial.sample_iid(config.sample_paths, rng);
  }

  PicardDriver driver(rate, h, horizon, cells, trunc, config, seed,
                      std::move(u0));

  int window_count = 1;
  if (config.window_override > 0.0)
    window_count = std::max(
        1, static_cast<int>(std::ceil(horizon / config.window_override)));
  std::vector<double> all_residuals;
  while (window_count <= 64 && window_count <= cells) {
    try {
      return driver.run(window_count, diagnostics);
    } catch (const PicardDriver::StallError& stall) {
      all_residuals.insert(all_residuals.end(), stall.residuals.begin(),
                           stall.residuals.end());
      window_count *= 2;
    }
  }
  throw picard_convergence_error(
      "picard_solve: no convergence even with windowed restarts",
      std::move(all_residuals));
}

}  // namespace opdyn
