#ifndef HAWKES_GENERATOR_HPP
#define HAWKES_GENERATOR_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "hawkes/model.hpp"
#include "hawkes/rng.hpp"

namespace hawkes {

/// How a generated stream is limited.  Exactly one limit is active:
/// horizon-limited streams cover [0, T], count-limited streams hold the
/// first N events.
struct GenConfig {
  enum class Mode { HorizonLimited, CountLimited };
  Mode mode = Mode::HorizonLimited;
  double horizon = 1.0;  // T, horizon mode
  int max_events = 250;  // N, count mode
  // Horizon mode only: keep offspring born after T instead of truncating.
  // Background immigration still stops at T.  Makes the completed-cluster
  // mean count exactly n_centers * mu * T / (1 - branching ratio), which the
  // distribution checks rely on; leave off for observation-window semantics.
  bool complete_clusters = false;
  bool with_gradients = false;

  void validate() const;
};

/// Pathwise derivative of one event's coordinates with respect to
/// (log mu, log alpha, log beta, log sigma_sq), branching structure frozen.
struct EventGrad {
  std::array<double, 4> dt{{0, 0, 0, 0}};
  std::array<double, 4> dx{{0, 0, 0, 0}};
  std::array<double, 4> dy{{0, 0, 0, 0}};
};

/// Frozen record of one simulated cluster tree: enough to recompute every
/// coordinate at perturbed parameters without re-deciding any discrete
/// choice (offspring counts, domain discards, truncation).
struct StreamTrace {
  struct Node {
    int parent = -1;     // index into nodes; -1 for background events
    double s_or_e = 0;   // background: cumulative Exp(1) sum; child: its Exp(1) draw
    double n1 = 0, n2 = 0;  // raw N(0,1) spatial draws (background: offset from center)
    double cx = 0, cy = 0;  // background only: chosen center
  };
  std::vector<Node> nodes;
  std::vector<int> retained;  // node indices in final time order
  double n_centers = 1.0;     // background rate divisor is n_centers * mu
  double sigma0 = 1.0;
  double horizon = 0.0;
  bool count_limited = false;
  int max_events = 0;
};

struct SimResult {
  EventStream stream;
  std::vector<EventGrad> grads;  // aligned with stream.events when requested
  StreamTrace trace;
};

/// Draws one stream from the Hawkes law by the cluster construction:
/// background immigrants from the Gaussian-mixture intensity, Poisson
/// offspring with Exp(beta) delays and sigma-scaled Gaussian offsets,
/// recursion to extinction, post-hoc discard of events outside the domain,
/// then horizon/count truncation.  Every retained coordinate is a smooth
/// function of the parameters for fixed noise and frozen structure.
EventStream simulate_stream(const ModelParams& params, const BackgroundConfig& bg,
                            const BaseNoise& noise, const GenConfig& cfg);

/// simulate_stream plus per-event gradients and the frozen-structure trace.
SimResult simulate_stream_traced(const ModelParams& params, const BackgroundConfig& bg,
                                 const BaseNoise& noise, const GenConfig& cfg);

/// Per-event coordinate gradients w.r.t. the log-parameters at fixed noise.
std::vector<EventGrad> reparam_gradient(const ModelParams& params, const BackgroundConfig& bg,
                                        const BaseNoise& noise, const GenConfig& cfg);

/// Recomputes coordinates (and gradients) at `params` over a frozen trace.
/// Discrete structure, retention and ordering stay exactly as recorded.
SimResult resimulate_frozen(const StreamTrace& trace, const ModelParams& params);

/// One stream per seed; results are index-stable regardless of execution
/// order.  Per-stream failures rethrow with the stream index attached.
std::vector<EventStream> simulate_batch(const ModelParams& params, const BackgroundConfig& bg,
                                        const std::vector<std::uint64_t>& seeds,
                                        const GenConfig& cfg, int jobs = 1);

}  // namespace hawkes

#endif
