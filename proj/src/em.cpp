#include "hawkes/em.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "hawkes/parallel.hpp"

namespace hawkes {

namespace {

// Bucketed lookup of earlier events within a square spatial window.
class SpatialIndex {
 public:
  SpatialIndex(const EventStream& s, double cell) : cell_(cell) {
    for (int i = 0; i < static_cast<int>(s.events.size()); ++i)
      cells_[key(s.events[i].x, s.events[i].y)].push_back(i);
  }

  // Indices j < i with |xy_j - xy_i| within one cell radius, ascending.
  void candidates(const EventStream& s, int i, std::vector<int>& out) const {
    out.clear();
    const Event& e = s.events[static_cast<std::size_t>(i)];
    long cx = coord(e.x), cy = coord(e.y);
    for (long dx = -1; dx <= 1; ++dx)
      for (long dy = -1; dy <= 1; ++dy) {
        auto it = cells_.find(pack(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (int j : it->second) {
          if (j >= i) break;  // bucket lists are ascending by construction
          out.push_back(j);
        }
      }
    std::sort(out.begin(), out.end());
  }

 private:
  long coord(double v) const { return static_cast<long>(std::floor(v / cell_)); }
  std::uint64_t pack(long cx, long cy) const {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(cy));
  }
  std::uint64_t key(double x, double y) const { return pack(coord(x), coord(y)); }

  double cell_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

double cutoff_radius(const ModelParams& params, double sigmas) {
  return sigmas * std::sqrt(std::max(params.sx_sq(), params.sy_sq()));
}

// Walks candidate parents of every event, invoking fn(i, j, g_ij, lambda_i)
// after the per-event normalizer lambda_i is known.
template <typename PerEvent>
void scan_stream(const EventStream& s, const ModelParams& params, const BackgroundConfig& bg,
                 double cutoff_sigmas, PerEvent fn) {
  const bool exact = cutoff_sigmas <= 0.0;
  const double r = exact ? 0.0 : cutoff_radius(params, cutoff_sigmas);
  SpatialIndex index(s, exact ? 1.0 : r);
  std::vector<int> cand;
  std::vector<double> kernels;
  for (int i = 0; i < static_cast<int>(s.events.size()); ++i) {
    const Event& ei = s.events[static_cast<std::size_t>(i)];
    if (exact) {
      cand.resize(static_cast<std::size_t>(i));
      for (int j = 0; j < i; ++j) cand[static_cast<std::size_t>(j)] = j;
    } else {
      index.candidates(s, i, cand);
    }
    kernels.resize(cand.size());
    double bg_val = background_intensity({ei.x, ei.y}, params.mu, bg);
    double lambda = bg_val;
    for (std::size_t c = 0; c < cand.size(); ++c) {
      const Event& ej = s.events[static_cast<std::size_t>(cand[c])];
      double g = triggering_kernel(ei.t - ej.t, ei.x - ej.x, ei.y - ej.y, params);
      kernels[c] = g;
      lambda += g;
    }
    if (!(lambda > 0.0)) throw NumericalError("e_step: zero intensity at an event");
    fn(i, bg_val, cand, kernels, lambda);
  }
}

}  // namespace

Responsibilities e_step(const EventStream& stream, const ModelParams& params,
                        const BackgroundConfig& bg, double spatial_cutoff_sigmas) {
  params.validate();
  Responsibilities resp;
  resp.background.resize(stream.size());
  resp.parents.resize(stream.size());
  scan_stream(stream, params, bg, spatial_cutoff_sigmas,
              [&](int i, double bg_val, const std::vector<int>& cand,
                  const std::vector<double>& kernels, double lambda) {
                auto ui = static_cast<std::size_t>(i);
                resp.background[ui] = bg_val / lambda;
                resp.parents[ui].reserve(cand.size());
                for (std::size_t c = 0; c < cand.size(); ++c)
                  resp.parents[ui].emplace_back(cand[c], kernels[c] / lambda);
              });
  return resp;
}

void EmStats::merge(const EmStats& other) {
  n_background += other.n_background;
  trig_weight += other.trig_weight;
  trig_delay += other.trig_delay;
  trig_dx2 += other.trig_dx2;
  trig_dy2 += other.trig_dy2;
  total_window += other.total_window;
  censor_tau.insert(censor_tau.end(), other.censor_tau.begin(), other.censor_tau.end());
}

EmStats responsibilities_stats(const EventStream& stream, const Responsibilities& resp,
                               double window_end) {
  EmStats st;
  st.total_window = window_end;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    st.n_background += resp.background[i];
    const Event& ei = stream.events[i];
    for (const auto& [j, p] : resp.parents[i]) {
      const Event& ej = stream.events[static_cast<std::size_t>(j)];
      st.trig_weight += p;
      st.trig_delay += p * (ei.t - ej.t);
      st.trig_dx2 += p * (ei.x - ej.x) * (ei.x - ej.x);
      st.trig_dy2 += p * (ei.y - ej.y) * (ei.y - ej.y);
    }
    st.censor_tau.push_back(window_end - ei.t);
  }
  return st;
}

namespace {

// E(beta) = sum 1 - e^{-beta tau} and its derivative in beta.
void censor_terms(const std::vector<double>& tau, double beta, double* e, double* de) {
  double s = 0.0, ds = 0.0;
  for (double t : tau) {
    double ex = std::exp(-beta * std::max(t, 0.0));
    s += 1.0 - ex;
    ds += std::max(t, 0.0) * ex;
  }
  *e = s;
  *de = ds;
}

// Stationarity of the profiled objective in beta:
//   W / beta - W E'(beta)/E(beta) - D = 0.
double beta_profile_gradient(double beta, double w, double d, const std::vector<double>& tau) {
  double e, de;
  censor_terms(tau, beta, &e, &de);
  if (!(e > 0.0)) return 1.0;  // beta ~ 0: push upward
  return w / beta - w * de / e - d;
}

}  // namespace

ModelParams m_step_from_stats(const EmStats& stats, const ModelParams& current,
                              const BackgroundConfig& bg, const EmConfig& cfg, bool* flagged) {
  if (flagged) *flagged = false;
  ModelParams next = current;

  double g_dom = bg.domain_mass();
  if (stats.total_window > 0.0 && g_dom > 0.0)
    next.mu = std::max(stats.n_background / (stats.total_window * g_dom), 1e-300);

  const double w = stats.trig_weight;
  if (w > 1e-12) {
    if (cfg.anisotropic) {
      next.sigma_x_sq = std::max(stats.trig_dx2 / w, 1e-300);
      next.sigma_y_sq = std::max(stats.trig_dy2 / w, 1e-300);
      next.sigma_sq = std::sqrt(*next.sigma_x_sq * *next.sigma_y_sq);
    } else {
      next.sigma_sq = std::max((stats.trig_dx2 + stats.trig_dy2) / (2.0 * w), 1e-300);
      next.sigma_x_sq.reset();
      next.sigma_y_sq.reset();
    }

    // Bracket and bisect the profiled gradient; it decreases from W * m2/(2 m1) - D.
    double lo = 1e-8, hi = 1.0;
    double glo = beta_profile_gradient(lo, w, stats.trig_delay, stats.censor_tau);
    double ghi = beta_profile_gradient(hi, w, stats.trig_delay, stats.censor_tau);
    int expand = 0;
    while (ghi > 0.0 && expand++ < 60) {
      hi *= 2.0;
      ghi = beta_profile_gradient(hi, w, stats.trig_delay, stats.censor_tau);
    }
    if (glo <= 0.0 || ghi > 0.0) {
      if (flagged) *flagged = true;  // keep the previous decay rate
    } else {
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (beta_profile_gradient(mid, w, stats.trig_delay, stats.censor_tau) > 0.0)
          lo = mid;
        else
          hi = mid;
        if (hi - lo < 1e-12 * hi) break;
      }
      next.beta = 0.5 * (lo + hi);
    }

    double e, de;
    censor_terms(stats.censor_tau, next.beta, &e, &de);
    double big = next.spatial_mass();
    if (e > 0.0 && big > 0.0) next.alpha = std::max(w * next.beta / (big * e), 1e-300);
  } else {
    // No triggered mass: alpha is driven toward zero, the shape parameters
    // have no information and stay put.
    next.alpha = 1e-12;
  }
  return next;
}

ModelParams m_step(const std::vector<EventStream>& streams,
                   const std::vector<Responsibilities>& resps, const ModelParams& current,
                   const BackgroundConfig& bg, const EmConfig& cfg) {
  if (streams.size() != resps.size()) throw DataError("m_step: stream/responsibility mismatch");
  EmStats stats;
  for (std::size_t k = 0; k < streams.size(); ++k)
    stats.merge(responsibilities_stats(streams[k], resps[k], streams[k].window_end()));
  return m_step_from_stats(stats, current, bg, cfg);
}

double observed_loglik(const std::vector<EventStream>& streams, const ModelParams& params,
                       const BackgroundConfig& bg, double spatial_cutoff_sigmas) {
  params.validate();
  const double g_dom = bg.domain_mass();
  const double big = params.spatial_mass();
  double ll = 0.0;
  for (const auto& s : streams) {
    const double t_end = s.window_end();
    double local = -params.mu * g_dom * t_end;
    scan_stream(s, params, bg, spatial_cutoff_sigmas,
                [&](int, double, const std::vector<int>&, const std::vector<double>&,
                    double lambda) { local += std::log(lambda); });
    for (const auto& e : s.events)
      local -= (params.alpha / params.beta) * big * (1.0 - std::exp(-params.beta * (t_end - e.t)));
    ll += local;
  }
  return ll;
}

EmResult fit_em(const std::vector<EventStream>& streams, const ModelParams& init,
                const BackgroundConfig& bg, const EmConfig& cfg) {
  init.validate();
  bg.validate();
  if (streams.empty()) throw DataError("fit_em: no streams");
  for (const auto& s : streams) s.validate();

  EmResult res;
  res.params = init;
  if (cfg.anisotropic && !init.anisotropic()) {
    res.params.sigma_x_sq = init.sigma_sq;
    res.params.sigma_y_sq = init.sigma_sq;
  }

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    // Fused E-step: per-stream sufficient statistics, merged in index order.
    std::vector<EmStats> partial(streams.size());
    parallel_for(streams.size(), cfg.jobs, [&](std::size_t k) {
      EmStats st;
      const EventStream& s = streams[k];
      st.total_window = s.window_end();
      scan_stream(s, res.params, bg, cfg.spatial_cutoff_sigmas,
                  [&](int i, double bg_val, const std::vector<int>& cand,
                      const std::vector<double>& kernels, double lambda) {
                    const Event& ei = s.events[static_cast<std::size_t>(i)];
                    st.n_background += bg_val / lambda;
                    for (std::size_t c = 0; c < cand.size(); ++c) {
                      const Event& ej = s.events[static_cast<std::size_t>(cand[c])];
                      double p = kernels[c] / lambda;
                      st.trig_weight += p;
                      st.trig_delay += p * (ei.t - ej.t);
                      st.trig_dx2 += p * (ei.x - ej.x) * (ei.x - ej.x);
                      st.trig_dy2 += p * (ei.y - ej.y) * (ei.y - ej.y);
                    }
                    st.censor_tau.push_back(st.total_window - ei.t);
                  });
      partial[k] = std::move(st);
    });
    EmStats stats;
    for (auto& p : partial) stats.merge(p);

    bool flagged = false;
    ModelParams prev = res.params;
    res.params = m_step_from_stats(stats, prev, bg, cfg, &flagged);
    if (flagged) ++res.flagged_iterations;

    res.param_trace.push_back(res.params);
    res.loglik_trace.push_back(
        observed_loglik(streams, res.params, bg, cfg.spatial_cutoff_sigmas));
    res.iterations = iter + 1;

    double rel = 0.0;
    auto track = [&](double a, double b) { rel = std::max(rel, std::abs(a - b) / std::max(std::abs(b), 1e-12)); };
    track(res.params.mu, prev.mu);
    track(res.params.alpha, prev.alpha);
    track(res.params.beta, prev.beta);
    track(res.params.sigma_sq, prev.sigma_sq);
    if (rel < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace hawkes
