#ifndef HAWKES_THINNING_HPP
#define HAWKES_THINNING_HPP

#include <optional>
#include <string>
#include <vector>

#include "hawkes/model.hpp"
#include "hawkes/rng.hpp"

namespace hawkes {

struct Rect {
  double x0, y0, x1, y1;
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

struct Region {
  std::string name;
  std::vector<Rect> rects;
  double reporting_rate = 1.0;           // q_d, probability an event is reported
  std::optional<double> retention_base;  // p_d base for the victimization step
};

/// Partition of the spatial domain into named regions carrying reporting
/// rates.  Points in no region resolve to default_rate; points on a shared
/// boundary resolve to the region listed first.
struct RegionMap {
  std::vector<Region> regions;
  double default_rate = 1.0;

  /// Uniform rate everywhere (no regions).
  static RegionMap uniform(double rate);

  /// Rates in range, rects well formed, no positive-area overlap between
  /// distinct regions (shared edges are fine).
  void validate() const;

  const Region* find(double x, double y) const;
};

/// Reporting rate at a point: the containing region's q, else default_rate.
double lookup_rate(Point p, const RegionMap& map);

/// Independent per-event retention with probability lookup_rate(x, y).
/// Bernoulli draws are keyed by event index so decisions are reproducible
/// and survive small coordinate perturbations.  With keep_removed, dropped
/// events stay in the output flagged retained = false.
EventStream thin_stream(const EventStream& s, const RegionMap& map, const BaseNoise& noise,
                        bool keep_removed = false);

/// Retention mask only (index-aligned with s.events).
std::vector<std::uint8_t> thinning_mask(const EventStream& s, const RegionMap& map,
                                        const BaseNoise& noise);

/// The victimization resampling step: per-region Bernoulli retention with
/// probability min(1, p_d * horizon_ratio).  Regions without retention
/// metadata are a configuration error; points outside every region keep
/// everything.
EventStream victimization_subsample(const EventStream& s, const RegionMap& map,
                                    double horizon_ratio, const BaseNoise& noise);

}  // namespace hawkes

#endif
