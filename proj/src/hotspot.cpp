#include "hawkes/hotspot.hpp"

#include <algorithm>
#include <cmath>

#include "hawkes/parallel.hpp"

namespace hawkes {

void EvalGrid::validate() const {
  if (rows < 1 || cols < 1) throw ConfigError("EvalGrid: rows/cols must be >= 1");
  if (!(t_eval > 0.0)) throw ConfigError("EvalGrid: t_eval must be positive");
  if (n_mc < 1) throw ConfigError("EvalGrid: n_mc must be >= 1");
}

GridSummary expected_counts(const ModelParams& theta, const BackgroundConfig& bg,
                            const RegionMap& map, const EvalGrid& grid, std::uint64_t seed,
                            int jobs) {
  theta.validate();
  bg.validate();
  grid.validate();
  const int ncells = grid.rows * grid.cols;
  const double cell_w = (bg.x_max - bg.x_min) / grid.cols;
  const double cell_h = (bg.y_max - bg.y_min) / grid.rows;

  GenConfig gen;
  gen.mode = GenConfig::Mode::HorizonLimited;
  gen.horizon = grid.t_eval;

  std::vector<std::vector<double>> counts(static_cast<std::size_t>(grid.n_mc));
  std::vector<double> totals(static_cast<std::size_t>(grid.n_mc), 0.0);
  parallel_for(static_cast<std::size_t>(grid.n_mc), jobs, [&](std::size_t rep) {
    BaseNoise noise(mix_key(seed, 307, rep));
    EventStream s = simulate_stream(theta, bg, noise, gen);
    EventStream thinned = thin_stream(s, map, noise);
    std::vector<double> c(static_cast<std::size_t>(ncells), 0.0);
    for (const auto& e : thinned.events) {
      int col = std::min(grid.cols - 1, static_cast<int>((e.x - bg.x_min) / cell_w));
      int row = std::min(grid.rows - 1, static_cast<int>((e.y - bg.y_min) / cell_h));
      c[static_cast<std::size_t>(row * grid.cols + col)] += 1.0;
    }
    totals[rep] = static_cast<double>(thinned.size());
    counts[rep] = std::move(c);
  });

  GridSummary out;
  out.rows = grid.rows;
  out.cols = grid.cols;
  out.mean_counts.assign(static_cast<std::size_t>(ncells), 0.0);
  out.std_errors.assign(static_cast<std::size_t>(ncells), 0.0);
  const double n = static_cast<double>(grid.n_mc);
  for (int cell = 0; cell < ncells; ++cell) {
    double m = 0.0;
    for (int rep = 0; rep < grid.n_mc; ++rep)
      m += counts[static_cast<std::size_t>(rep)][static_cast<std::size_t>(cell)];
    m /= n;
    double var = 0.0;
    for (int rep = 0; rep < grid.n_mc; ++rep) {
      double d = counts[static_cast<std::size_t>(rep)][static_cast<std::size_t>(cell)] - m;
      var += d * d;
    }
    var = grid.n_mc > 1 ? var / (n - 1.0) : 0.0;
    // Daily averages: divide the window total by t_eval.
    out.mean_counts[static_cast<std::size_t>(cell)] = m / grid.t_eval;
    out.std_errors[static_cast<std::size_t>(cell)] = std::sqrt(var / n) / grid.t_eval;
  }
  for (double t : totals) out.mean_total_events += t;
  out.mean_total_events /= n;
  out.hotspots = top_k(out, std::min(10, ncells));
  return out;
}

std::vector<Cell> top_k(const GridSummary& summary, int k) {
  const int ncells = summary.rows * summary.cols;
  if (k < 0 || k > ncells) throw ConfigError("top_k: k outside [0, cells]");
  std::vector<int> idx(static_cast<std::size_t>(ncells));
  for (int i = 0; i < ncells; ++i) idx[static_cast<std::size_t>(i)] = i;
  // Ties resolved row-major so hotspot comparisons stay deterministic.
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    double ma = summary.mean_counts[static_cast<std::size_t>(a)];
    double mb = summary.mean_counts[static_cast<std::size_t>(b)];
    if (ma != mb) return ma > mb;
    return a < b;
  });
  std::vector<Cell> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    out.push_back({idx[static_cast<std::size_t>(i)] / summary.cols,
                   idx[static_cast<std::size_t>(i)] % summary.cols});
  return out;
}

double relative_mae(const GridSummary& truth, const GridSummary& est, double floor,
                    int* excluded_out) {
  if (truth.rows != est.rows || truth.cols != est.cols)
    throw DataError("relative_mae: grid shape mismatch");
  double sum = 0.0;
  int used = 0, excluded = 0;
  for (std::size_t i = 0; i < truth.mean_counts.size(); ++i) {
    double t = truth.mean_counts[i];
    if (t < floor) {
      ++excluded;
      continue;
    }
    sum += std::abs(t - est.mean_counts[i]) / t;
    ++used;
  }
  if (excluded_out) *excluded_out = excluded;
  if (used == 0) throw NumericalError("relative_mae: every cell fell below the floor");
  return sum / static_cast<double>(used);
}

double hotspot_accuracy(const std::vector<Cell>& truth_set, const std::vector<Cell>& est_set) {
  if (truth_set.size() != est_set.size())
    throw DataError("hotspot_accuracy: sets must have equal size");
  if (truth_set.empty()) return 0.0;
  std::set<Cell> truth(truth_set.begin(), truth_set.end());
  std::size_t common = 0;
  for (const auto& c : est_set) common += truth.count(c);
  return static_cast<double>(common) / static_cast<double>(truth_set.size());
}

std::vector<SweepRow> robustness_sweep(const std::vector<ModelParams>& theta_grid,
                                       const BackgroundConfig& bg, const RegionMap& map,
                                       const SweepConfig& cfg, const Estimator& estimator,
                                       std::uint64_t seed, int jobs) {
  std::vector<SweepRow> rows(theta_grid.size());
  for (std::size_t i = 0; i < theta_grid.size(); ++i) {
    const ModelParams& theta0 = theta_grid[i];
    std::uint64_t combo_seed = mix_key(seed, 401, i);

    std::vector<EventStream> training(static_cast<std::size_t>(cfg.n_training_streams));
    parallel_for(training.size(), jobs, [&](std::size_t j) {
      BaseNoise noise(mix_key(combo_seed, 402, j));
      EventStream s = simulate_stream(theta0, bg, noise, cfg.gen);
      training[j] = thin_stream(s, map, noise);
    });

    ModelParams theta_hat = estimator(training, theta0, combo_seed);

    GridSummary truth = expected_counts(theta0, bg, map, cfg.grid, mix_key(combo_seed, 403, 0), jobs);
    GridSummary est =
        expected_counts(theta_hat, bg, map, cfg.grid, mix_key(combo_seed, 404, 0), jobs);
    SweepRow row;
    row.theta_true = theta0;
    row.theta_hat = theta_hat;
    row.accuracy = hotspot_accuracy(top_k(truth, cfg.top_k), top_k(est, cfg.top_k));
    row.mae = relative_mae(truth, est, cfg.mae_floor);
    rows[i] = row;
  }
  return rows;
}

}  // namespace hawkes
