#include "hawkes/gof.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hawkes/parallel.hpp"
#include "hawkes/stats.hpp"

namespace hawkes {

std::vector<double> interarrivals(const EventStream& s) {
  std::vector<double> out;
  if (s.size() < 2) return out;
  out.reserve(s.size() - 1);
  for (std::size_t i = 1; i < s.size(); ++i)
    out.push_back(s.events[i].t - s.events[i - 1].t);
  return out;
}

InterarrivalPool pool_interarrivals(const std::vector<EventStream>& streams,
                                    const std::string& source) {
  InterarrivalPool pool;
  pool.source = source;
  pool.stream_count = streams.size();
  for (const auto& s : streams) {
    auto gaps = interarrivals(s);
    pool.values.insert(pool.values.end(), gaps.begin(), gaps.end());
  }
  return pool;
}

GofHistogram chi_square_histogram(const InterarrivalPool& training,
                                  const InterarrivalPool& synthetic,
                                  const ChiSquareConfig& cfg) {
  if (training.values.empty() || synthetic.values.empty())
    throw NumericalError("chi_square: empty pool");
  if (cfg.n_bins < 1) throw ConfigError("chi_square: n_bins must be positive");

  std::vector<double> all = training.values;
  all.insert(all.end(), synthetic.values.begin(), synthetic.values.end());
  double lo = 0.0;
  double hi = sample_quantile(all, cfg.upper_quantile);
  if (!(hi > lo)) throw NumericalError("chi_square: degenerate support");

  // Equal-width bins over [0, q_{99.5}] plus one overflow bin.
  const int nb = cfg.n_bins + 1;
  const double width = (hi - lo) / cfg.n_bins;
  std::vector<double> f_tr(nb, 0.0), f_sy(nb, 0.0);
  auto bin_of = [&](double v) {
    if (v >= hi) return cfg.n_bins;
    int b = static_cast<int>((v - lo) / width);
    return std::clamp(b, 0, cfg.n_bins - 1);
  };
  for (double v : training.values) f_tr[static_cast<std::size_t>(bin_of(v))] += 1.0;
  for (double v : synthetic.values) f_sy[static_cast<std::size_t>(bin_of(v))] += 1.0;

  // Unequal pool sizes would conflate size with shape; rescale synthetic to
  // the training total.
  double scale = static_cast<double>(training.values.size()) /
                 static_cast<double>(synthetic.values.size());
  for (double& v : f_sy) v *= scale;

  // Merge zero-count training bins rightward (last one leftward).
  GofHistogram h;
  std::vector<double> edges(static_cast<std::size_t>(nb) + 1);
  for (int b = 0; b <= cfg.n_bins; ++b) edges[static_cast<std::size_t>(b)] = lo + b * width;
  edges.back() = std::numeric_limits<double>::infinity();

  double carry_tr = 0.0, carry_sy = 0.0, edge_lo = edges[0];
  for (int b = 0; b < nb; ++b) {
    carry_tr += f_tr[static_cast<std::size_t>(b)];
    carry_sy += f_sy[static_cast<std::size_t>(b)];
    if (carry_tr > 0.0) {
      if (h.edges.empty()) h.edges.push_back(edge_lo);
      h.edges.push_back(edges[static_cast<std::size_t>(b) + 1]);
      h.f_training.push_back(carry_tr);
      h.f_synthetic.push_back(carry_sy);
      carry_tr = carry_sy = 0.0;
    }
  }
  if (carry_tr > 0.0 || carry_sy > 0.0) {
    if (h.f_training.empty()) throw NumericalError("chi_square: no nonzero training bins");
    h.f_training.back() += carry_tr;
    h.f_synthetic.back() += carry_sy;
    h.edges.back() = edges.back();
  }

  double stat = 0.0;
  for (std::size_t b = 0; b < h.f_training.size(); ++b) {
    double d = h.f_training[b] - h.f_synthetic[b];
    stat += d * d / h.f_training[b];
  }
  h.statistic = stat;
  return h;
}

double chi_square(const InterarrivalPool& training, const InterarrivalPool& synthetic,
                  const ChiSquareConfig& cfg) {
  return chi_square_histogram(training, synthetic, cfg).statistic;
}

double gof_score(const ModelParams& theta_hat, const InterarrivalPool& training,
                 const BackgroundConfig& bg, const RegionMap& map, int k_synthetic,
                 const GenConfig& gen_cfg, std::uint64_t seed, const ChiSquareConfig& chi_cfg,
                 int jobs) {
  if (k_synthetic <= 0) throw ConfigError("gof_score: k_synthetic must be positive");
  theta_hat.validate();
  std::vector<EventStream> synth(static_cast<std::size_t>(k_synthetic));
  parallel_for(synth.size(), jobs, [&](std::size_t j) {
    BaseNoise noise(mix_key(seed, 211, j));
    EventStream s = simulate_stream(theta_hat, bg, noise, gen_cfg);
    synth[j] = thin_stream(s, map, noise);
  });
  InterarrivalPool pool = pool_interarrivals(synth, "synthetic");
  return chi_square(training, pool, chi_cfg);
}

SelectionResult select_best(const std::vector<TrainRun>& runs, const InterarrivalPool& training,
                            const BackgroundConfig& bg, const RegionMap& map, int k_synthetic,
                            const GenConfig& gen_cfg, std::uint64_t seed,
                            const ChiSquareConfig& chi_cfg, int jobs) {
  if (runs.empty()) throw ConfigError("select_best: no runs");
  SelectionResult sel;
  sel.scores.assign(runs.size(), std::numeric_limits<double>::quiet_NaN());
  bool any = false;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!runs[i].ok()) continue;
    double score =
        gof_score(runs[i].theta_hat, training, bg, map, k_synthetic, gen_cfg, seed, chi_cfg, jobs);
    sel.scores[i] = score;
    if (score < best) {  // strict: ties keep the earliest run
      best = score;
      sel.best_index = i;
    }
    any = true;
  }
  if (!any) throw NumericalError("select_best: every run failed");
  return sel;
}

QqData qq_residuals(const std::vector<EventStream>& streams, const ModelParams& params,
                    const BackgroundConfig& bg) {
  std::vector<double> residuals;
  for (const auto& s : streams) {
    auto r = compensator_residuals(s, params, bg);
    residuals.insert(residuals.end(), r.begin(), r.end());
  }
  std::sort(residuals.begin(), residuals.end());
  QqData qq;
  const double n = static_cast<double>(residuals.size());
  qq.empirical = residuals;
  qq.theoretical.reserve(residuals.size());
  for (std::size_t i = 0; i < residuals.size(); ++i)
    qq.theoretical.push_back(-std::log(1.0 - (static_cast<double>(i) + 0.5) / n));
  return qq;
}

}  // namespace hawkes
