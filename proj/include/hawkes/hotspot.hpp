#ifndef HAWKES_HOTSPOT_HPP
#define HAWKES_HOTSPOT_HPP

#include <cstdint>
#include <functional>
#include <set>
#include <vector>

#include "hawkes/generator.hpp"
#include "hawkes/thinning.hpp"

namespace hawkes {

/// Evaluation grid over the domain rectangle: R x C cells, Monte-Carlo
/// replicates over a horizon of T_eval days.
struct EvalGrid {
  int rows = 7;
  int cols = 16;
  double t_eval = 7.0;
  int n_mc = 100;

  void validate() const;
};

struct Cell {
  int row = 0;
  int col = 0;
  bool operator<(const Cell& o) const { return row != o.row ? row < o.row : col < o.col; }
  bool operator==(const Cell& o) const { return row == o.row && col == o.col; }
};

/// Expected average daily reported counts per cell with MC standard errors.
struct GridSummary {
  int rows = 0, cols = 0;
  std::vector<double> mean_counts;  // row-major, events per day
  std::vector<double> std_errors;   // row-major
  double mean_total_events = 0.0;   // mean retained events per replicate
  std::vector<Cell> hotspots;

  double at(int r, int c) const { return mean_counts[static_cast<std::size_t>(r * cols + c)]; }
};

/// Monte-Carlo expected daily reported counts: n_mc simulations over
/// [0, t_eval], thinned through the region map, counted per cell, divided by
/// t_eval, averaged over replicates.
GridSummary expected_counts(const ModelParams& theta, const BackgroundConfig& bg,
                            const RegionMap& map, const EvalGrid& grid, std::uint64_t seed,
                            int jobs = 1);

/// k cells with the highest means; ties resolved row-major.
std::vector<Cell> top_k(const GridSummary& summary, int k = 10);

/// Mean over cells of |truth - est| / truth, excluding cells whose truth
/// mean falls below the floor; excluded_out reports how many were dropped.
double relative_mae(const GridSummary& truth, const GridSummary& est, double floor = 1e-3,
                    int* excluded_out = nullptr);

/// |intersection| / k for equally sized hotspot sets.
double hotspot_accuracy(const std::vector<Cell>& truth_set, const std::vector<Cell>& est_set);

struct SweepRow {
  ModelParams theta_true;
  ModelParams theta_hat;
  double accuracy = 0.0;
  double mae = 0.0;
};

/// Full generate -> thin -> estimate -> evaluate pipeline per combination.
/// The estimator is injected so the sweep can run against the WGAN fit, the
/// EM baseline, or an estimator bypass.
using Estimator = std::function<ModelParams(const std::vector<EventStream>&, const ModelParams&,
                                            std::uint64_t seed)>;

struct SweepConfig {
  int n_training_streams = 100;
  GenConfig gen;
  EvalGrid grid;
  int top_k = 10;
  double mae_floor = 1e-3;
};

std::vector<SweepRow> robustness_sweep(const std::vector<ModelParams>& theta_grid,
                                       const BackgroundConfig& bg, const RegionMap& map,
                                       const SweepConfig& cfg, const Estimator& estimator,
                                       std::uint64_t seed, int jobs = 1);

}  // namespace hawkes

#endif
