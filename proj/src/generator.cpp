#include "hawkes/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hawkes/parallel.hpp"

namespace hawkes {

void GenConfig::validate() const {
  if (mode == Mode::HorizonLimited) {
    if (!(horizon > 0.0)) throw ConfigError("GenConfig: horizon must be positive");
  } else {
    if (max_events <= 0) throw ConfigError("GenConfig: max_events must be positive");
  }
}

namespace {

struct RawEvent {
  double t, x, y;
  std::uint64_t id;
  int parent;  // raw index, -1 background
  int trace_node;
  EventGrad grad;
};

struct BuildState {
  std::vector<RawEvent> raw;
  StreamTrace trace;
};

// Generates background events on [0, t_bg_end] and the full offspring
// recursion, pruning only children born after `prune_after` (infinity keeps
// complete clusters).  Pruned children cannot have descendants before their
// own birth time, so pruning is exact for the kept window.
void generate_tree(const ModelParams& params, const BackgroundConfig& bg, const BaseNoise& noise,
                   double t_bg_end, double prune_after, bool with_gradients, BuildState& st) {
  st.raw.clear();
  st.trace.nodes.clear();

  const double n_centers = static_cast<double>(bg.centers.size());
  const double total_rate = n_centers * params.mu;
  const double branching = params.branching_ratio();
  const double sx = std::sqrt(params.sx_sq());
  const double sy = std::sqrt(params.sy_sq());

  // Background: inversion of cumulative Exp(1) sums, mixture-of-Gaussians
  // locations.  Times scale as 1/(n mu), hence d t / d log mu = -t.
  double s = 0.0;
  for (std::uint64_t j = 0;; ++j) {
    s += -std::log(noise.uniform(Channel::BgTime, j));
    double t = s / total_rate;
    if (t > t_bg_end) break;
    double uc = noise.uniform(Channel::BgCenter, j);
    auto ci = static_cast<std::size_t>(uc * n_centers);
    if (ci >= bg.centers.size()) ci = bg.centers.size() - 1;
    double n1 = noise.normal(Channel::BgLocX, j);
    double n2 = noise.normal(Channel::BgLocY, j);
    RawEvent ev;
    ev.t = t;
    ev.x = bg.centers[ci].x + bg.sigma0 * n1;
    ev.y = bg.centers[ci].y + bg.sigma0 * n2;
    ev.id = background_event_id(j);
    ev.parent = -1;
    if (with_gradients) ev.grad.dt[0] = -t;
    ev.trace_node = static_cast<int>(st.trace.nodes.size());
    st.trace.nodes.push_back({-1, s, n1, n2, bg.centers[ci].x, bg.centers[ci].y});
    st.raw.push_back(ev);
  }

  // Offspring recursion over the growing list; parents always precede
  // children, which resimulate_frozen relies on.
  for (std::size_t i = 0; i < st.raw.size(); ++i) {
    const RawEvent parent = st.raw[i];
    int m = poisson_quantile(noise.uniform(Channel::OffCount, parent.id), branching);
    for (int k = 0; k < m; ++k) {
      std::uint64_t cid = child_event_id(parent.id, static_cast<std::uint64_t>(k));
      double e = -std::log(noise.uniform(Channel::OffDelay, cid));
      double delay = e / params.beta;
      double t = parent.t + delay;
      if (t > prune_after) continue;
      double n1 = noise.normal(Channel::OffLocX, cid);
      double n2 = noise.normal(Channel::OffLocY, cid);
      double ox = sx * n1, oy = sy * n2;
      RawEvent ev;
      ev.t = t;
      ev.x = parent.x + ox;
      ev.y = parent.y + oy;
      ev.id = cid;
      ev.parent = static_cast<int>(i);
      if (with_gradients) {
        ev.grad = parent.grad;
        ev.grad.dt[2] += -delay;  // d(-log u / beta) / d log beta
        ev.grad.dx[3] += ox / 2.0;  // d(sigma n) / d log sigma^2
        ev.grad.dy[3] += oy / 2.0;
      }
      ev.trace_node = static_cast<int>(st.trace.nodes.size());
      st.trace.nodes.push_back({parent.trace_node, e, n1, n2, 0.0, 0.0});
      st.raw.push_back(ev);
    }
  }
}

SimResult assemble(const BackgroundConfig& bg, const GenConfig& cfg, BuildState& st) {
  std::vector<int> keep;
  keep.reserve(st.raw.size());
  const bool hard_horizon =
      cfg.mode == GenConfig::Mode::HorizonLimited && !cfg.complete_clusters;
  for (std::size_t i = 0; i < st.raw.size(); ++i) {
    const RawEvent& e = st.raw[i];
    if (!bg.contains(e.x, e.y)) continue;
    if (hard_horizon && e.t > cfg.horizon) continue;
    keep.push_back(static_cast<int>(i));
  }
  std::sort(keep.begin(), keep.end(),
            [&](int a, int b) { return st.raw[a].t < st.raw[b].t; });
  if (cfg.mode == GenConfig::Mode::CountLimited &&
      keep.size() > static_cast<std::size_t>(cfg.max_events))
    keep.resize(static_cast<std::size_t>(cfg.max_events));

  std::vector<int> raw_to_final(st.raw.size(), -2);
  for (std::size_t f = 0; f < keep.size(); ++f) raw_to_final[keep[f]] = static_cast<int>(f);

  SimResult res;
  res.stream.events.reserve(keep.size());
  if (cfg.with_gradients) res.grads.reserve(keep.size());
  for (int ri : keep) {
    const RawEvent& e = st.raw[ri];
    Event ev;
    ev.t = e.t;
    ev.x = e.x;
    ev.y = e.y;
    ev.parent_index = e.parent < 0 ? -1 : raw_to_final[e.parent];
    res.stream.events.push_back(ev);
    if (cfg.with_gradients) res.grads.push_back(e.grad);
  }
  if (cfg.mode == GenConfig::Mode::HorizonLimited) {
    res.stream.horizon = cfg.horizon;
  } else {
    res.stream.truncation_count = cfg.max_events;
  }

  res.trace = std::move(st.trace);
  res.trace.retained.reserve(keep.size());
  for (int ri : keep) res.trace.retained.push_back(st.raw[ri].trace_node);
  res.trace.n_centers = static_cast<double>(bg.centers.size());
  res.trace.sigma0 = bg.sigma0;
  res.trace.horizon = cfg.mode == GenConfig::Mode::HorizonLimited ? cfg.horizon : 0.0;
  res.trace.count_limited = cfg.mode == GenConfig::Mode::CountLimited;
  res.trace.max_events = cfg.max_events;
  return res;
}

}  // namespace

SimResult simulate_stream_traced(const ModelParams& params, const BackgroundConfig& bg,
                                 const BaseNoise& noise, const GenConfig& cfg) {
  params.validate();
  bg.validate();
  cfg.validate();
  if (cfg.with_gradients && params.anisotropic())
    throw NumericalError("simulate: gradients are only defined for the isotropic form");
  if (params.branching_ratio() >= 1.0)
    throw NumericalError(
        "simulate: supercritical parameters (branching ratio >= 1), clusters may not terminate");

  BuildState st;
  if (cfg.mode == GenConfig::Mode::HorizonLimited) {
    double prune = cfg.complete_clusters ? std::numeric_limits<double>::infinity() : cfg.horizon;
    generate_tree(params, bg, noise, cfg.horizon, prune, cfg.with_gradients, st);
    return assemble(bg, cfg, st);
  }

  // Count-limited: grow the work horizon until the first N in-domain events
  // exist.  Keyed noise makes every pass consistent with the previous ones.
  const double n_centers = static_cast<double>(bg.centers.size());
  double stationary = n_centers * params.mu / (1.0 - params.branching_ratio());
  double t_work = std::max(1e-9, 1.5 * cfg.max_events / stationary);
  for (int attempt = 0; attempt < 200; ++attempt) {
    generate_tree(params, bg, noise, t_work, t_work, cfg.with_gradients, st);
    std::size_t in_domain = 0;
    for (const auto& e : st.raw)
      if (bg.contains(e.x, e.y)) ++in_domain;
    if (in_domain >= static_cast<std::size_t>(cfg.max_events)) return assemble(bg, cfg, st);
    t_work *= 2.0;
  }
  throw NumericalError("simulate: failed to reach the requested event count");
}

EventStream simulate_stream(const ModelParams& params, const BackgroundConfig& bg,
                            const BaseNoise& noise, const GenConfig& cfg) {
  return simulate_stream_traced(params, bg, noise, cfg).stream;
}

std::vector<EventGrad> reparam_gradient(const ModelParams& params, const BackgroundConfig& bg,
                                        const BaseNoise& noise, const GenConfig& cfg) {
  GenConfig c = cfg;
  c.with_gradients = true;
  return simulate_stream_traced(params, bg, noise, c).grads;
}

SimResult resimulate_frozen(const StreamTrace& trace, const ModelParams& params) {
  params.validate();
  if (params.anisotropic())
    throw NumericalError("resimulate_frozen: isotropic parameters expected");
  const double sx = std::sqrt(params.sigma_sq);
  const double total_rate = trace.n_centers * params.mu;

  struct NodeState {
    double t, x, y;
    EventGrad grad;
  };
  std::vector<NodeState> states(trace.nodes.size());
  for (std::size_t i = 0; i < trace.nodes.size(); ++i) {
    const auto& nd = trace.nodes[i];
    NodeState stt{};
    if (nd.parent < 0) {
      stt.t = nd.s_or_e / total_rate;
      stt.x = nd.cx + trace.sigma0 * nd.n1;
      stt.y = nd.cy + trace.sigma0 * nd.n2;
      stt.grad.dt[0] = -stt.t;
    } else {
      const NodeState& par = states[static_cast<std::size_t>(nd.parent)];
      double delay = nd.s_or_e / params.beta;
      double ox = sx * nd.n1, oy = sx * nd.n2;
      stt.t = par.t + delay;
      stt.x = par.x + ox;
      stt.y = par.y + oy;
      stt.grad = par.grad;
      stt.grad.dt[2] += -delay;
      stt.grad.dx[3] += ox / 2.0;
      stt.grad.dy[3] += oy / 2.0;
    }
    states[i] = stt;
  }

  SimResult res;
  res.trace = trace;
  res.stream.horizon = trace.horizon;
  if (trace.count_limited) res.stream.truncation_count = trace.max_events;
  res.stream.events.reserve(trace.retained.size());
  res.grads.reserve(trace.retained.size());
  for (int ni : trace.retained) {
    const NodeState& stt = states[static_cast<std::size_t>(ni)];
    Event ev;
    ev.t = stt.t;
    ev.x = stt.x;
    ev.y = stt.y;
    res.stream.events.push_back(ev);
    res.grads.push_back(stt.grad);
  }
  return res;
}

std::vector<EventStream> simulate_batch(const ModelParams& params, const BackgroundConfig& bg,
                                        const std::vector<std::uint64_t>& seeds,
                                        const GenConfig& cfg, int jobs) {
  std::vector<EventStream> out(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t i) {
    try {
      out[i] = simulate_stream(params, bg, BaseNoise(seeds[i]), cfg);
    } catch (const std::exception& ex) {
      throw NumericalError("stream " + std::to_string(i) + ": " + ex.what());
    }
  });
  return out;
}

}  // namespace hawkes
