#ifndef HAWKES_GOF_HPP
#define HAWKES_GOF_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "hawkes/generator.hpp"
#include "hawkes/thinning.hpp"
#include "hawkes/wgan.hpp"

namespace hawkes {

/// Pooled inter-arrival times over a collection of streams.
struct InterarrivalPool {
  std::vector<double> values;
  std::string source;  // "training" | "synthetic"
  std::size_t stream_count = 0;
};

/// Strictly positive gaps t_i - t_{i-1}; empty for streams shorter than two.
std::vector<double> interarrivals(const EventStream& s);

InterarrivalPool pool_interarrivals(const std::vector<EventStream>& streams,
                                    const std::string& source);

struct ChiSquareConfig {
  int n_bins = 50;
  double upper_quantile = 0.995;  // bin range ends here; one overflow bin
};

/// Binned synthetic-vs-training histogram data, exported for plotting.
struct GofHistogram {
  std::vector<double> edges;          // merged bin edges, last edge = +inf overflow
  std::vector<double> f_training;     // counts
  std::vector<double> f_synthetic;    // rescaled counts
  double statistic = 0.0;
};

/// Chi-square distance between the pooled inter-arrival histograms on
/// equal-width bins over the union of supports.  Synthetic frequencies are
/// rescaled to the training total before differencing; zero-count training
/// bins are merged rightward.
double chi_square(const InterarrivalPool& training, const InterarrivalPool& synthetic,
                  const ChiSquareConfig& cfg = {});

GofHistogram chi_square_histogram(const InterarrivalPool& training,
                                  const InterarrivalPool& synthetic,
                                  const ChiSquareConfig& cfg = {});

/// Simulates k_synthetic streams at theta_hat, applies the same missingness
/// mechanism as the training data, and returns the chi-square distance of
/// the pooled inter-arrivals.
double gof_score(const ModelParams& theta_hat, const InterarrivalPool& training,
                 const BackgroundConfig& bg, const RegionMap& map, int k_synthetic,
                 const GenConfig& gen_cfg, std::uint64_t seed,
                 const ChiSquareConfig& chi_cfg = {}, int jobs = 1);

/// Best run by gof_score; ties broken by the earliest run index.  Failed
/// runs are skipped; all-failed is an error.
struct SelectionResult {
  std::size_t best_index = 0;
  std::vector<double> scores;  // NaN for failed runs
};
SelectionResult select_best(const std::vector<TrainRun>& runs, const InterarrivalPool& training,
                            const BackgroundConfig& bg, const RegionMap& map, int k_synthetic,
                            const GenConfig& gen_cfg, std::uint64_t seed,
                            const ChiSquareConfig& chi_cfg = {}, int jobs = 1);

/// QQ data of compensator residuals against Exp(1), for un-thinned streams
/// only (the classical diagnostic does not apply under missingness).
struct QqData {
  std::vector<double> theoretical;
  std::vector<double> empirical;
};
QqData qq_residuals(const std::vector<EventStream>& streams, const ModelParams& params,
                    const BackgroundConfig& bg);

}  // namespace hawkes

#endif
