#ifndef HAWKES_RNG_HPP
#define HAWKES_RNG_HPP

#include <cstdint>
#include <limits>

#include "hawkes/errors.hpp"

namespace hawkes {

// Counter-based randomness: every variate is a pure function of
// (seed, channel, index).  Channels are disjoint by construction, so drawing
// more variates in one channel never shifts any other channel, and a draw can
// be revisited at any time without replaying a sequential state.
enum class Channel : std::uint64_t {
  BgTime = 1,
  BgCenter = 2,
  BgLocX = 3,
  BgLocY = 4,
  OffCount = 5,
  OffDelay = 6,
  OffLocX = 7,
  OffLocY = 8,
  Thin = 9,
  Victim = 10,
  CriticInit = 11,
  Shuffle = 12,
  Interp = 13,
  Generic = 14,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Stable key for one variate; also used to derive per-event noise ids.
std::uint64_t mix_key(std::uint64_t seed, std::uint64_t channel, std::uint64_t index);

/// Noise id of the j-th background event / the k-th child of `parent_id`.
std::uint64_t background_event_id(std::uint64_t j);
std::uint64_t child_event_id(std::uint64_t parent_id, std::uint64_t k);

/// Quantile function of N(0,1).  Acklam's rational approximation refined with
/// one Halley step against std::erfc; accurate to full double precision.
double normal_quantile(double p);

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse-CDF sample of Poisson(lambda) from a single uniform.
int poisson_quantile(double u, double lambda);

/// The base source of randomness z for one stream: named channels of U(0,1)
/// and N(0,1) variates addressed by index.  Same seed, same values, always.
class BaseNoise {
 public:
  explicit BaseNoise(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// U(0,1), strictly inside the open interval.
  double uniform(Channel c, std::uint64_t index) const;
  /// N(0,1) via the normal quantile of the matching uniform.
  double normal(Channel c, std::uint64_t index) const;

  /// Optional per-channel draw budget.  Indexing past the budget throws a
  /// NumericalError instead of silently re-drawing.
  void set_budget(std::uint64_t max_index) { budget_ = max_index; }

 private:
  std::uint64_t seed_;
  std::uint64_t budget_ = std::numeric_limits<std::uint64_t>::max();
};

}  // namespace hawkes

#endif
