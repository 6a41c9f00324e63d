#ifndef HAWKES_EM_HPP
#define HAWKES_EM_HPP

#include <utility>
#include <vector>

#include "hawkes/model.hpp"

namespace hawkes {

/// Posterior parentage probabilities for one stream: per event the
/// background probability plus sparse (parent index, probability) pairs.
/// Each row sums to one.
struct Responsibilities {
  std::vector<double> background;
  std::vector<std::vector<std::pair<int, double>>> parents;

  std::size_t size() const { return background.size(); }
};

struct EmConfig {
  // Candidate parents beyond this many triggering sigmas are dropped; their
  // kernel mass is below double precision at the default.  0 = all pairs.
  double spatial_cutoff_sigmas = 8.0;
  bool anisotropic = false;
  int max_iters = 100;
  double tol = 1e-4;  // relative parameter change
  int jobs = 1;
};

/// Branching-structure E-step: exact formula evaluation per event,
/// normalized over the retained candidate set.
Responsibilities e_step(const EventStream& stream, const ModelParams& params,
                        const BackgroundConfig& bg, double spatial_cutoff_sigmas = 8.0);

/// Sufficient statistics of the expected complete-data log-likelihood.
struct EmStats {
  double n_background = 0.0;             // sum of background responsibilities
  double trig_weight = 0.0;              // W: total triggered mass
  double trig_delay = 0.0;               // D: responsibility-weighted delays
  double trig_dx2 = 0.0, trig_dy2 = 0.0; // weighted squared offsets
  double total_window = 0.0;             // sum of observation windows
  std::vector<double> censor_tau;        // T_k - t_j over all events

  void merge(const EmStats& other);
};

EmStats responsibilities_stats(const EventStream& stream, const Responsibilities& resp,
                               double window_end);

/// M-step over pooled statistics: closed-form mu and sigma^2 updates, the
/// temporal decay from a bounded 1-D solve of the profiled objective with
/// the (1 - e^{-beta (T - t_j)}) edge correction.  Falls back to the current
/// parameters (flagged) when the solve cannot bracket a root.
ModelParams m_step_from_stats(const EmStats& stats, const ModelParams& current,
                              const BackgroundConfig& bg, const EmConfig& cfg,
                              bool* flagged = nullptr);

/// Spec-shaped M-step over materialized responsibilities.
ModelParams m_step(const std::vector<EventStream>& streams,
                   const std::vector<Responsibilities>& resps, const ModelParams& current,
                   const BackgroundConfig& bg, const EmConfig& cfg = {});

/// Observed-data log-likelihood of the full Hawkes model.
double observed_loglik(const std::vector<EventStream>& streams, const ModelParams& params,
                       const BackgroundConfig& bg, double spatial_cutoff_sigmas = 8.0);

struct EmResult {
  ModelParams params;
  std::vector<ModelParams> param_trace;  // after each iteration
  std::vector<double> loglik_trace;      // observed-data ll after each iteration
  int iterations = 0;
  bool converged = false;
  int flagged_iterations = 0;
};

/// Full EM loop treating the streams as complete Hawkes data (deliberately
/// mis-specified on reported-only input).
EmResult fit_em(const std::vector<EventStream>& streams, const ModelParams& init,
                const BackgroundConfig& bg, const EmConfig& cfg = {});

}  // namespace hawkes

#endif
