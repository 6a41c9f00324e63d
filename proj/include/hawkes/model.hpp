#ifndef HAWKES_MODEL_HPP
#define HAWKES_MODEL_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "hawkes/errors.hpp"

namespace hawkes {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Parameter vector of the spatiotemporal Hawkes model.
///
/// Background mass scale mu, triggering amplitude alpha, temporal decay beta
/// and spatial triggering variance sigma_sq; all strictly positive.  An
/// anisotropic variant carries separate x/y variances.  The alternative
/// (theta, omega) coordinates relate exactly via alpha = theta * omega,
/// beta = omega.
struct ModelParams {
  double mu = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  double sigma_sq = 1.0;
  std::optional<double> sigma_x_sq;  // set both for the anisotropic form
  std::optional<double> sigma_y_sq;

  ModelParams() = default;
  ModelParams(double mu_, double alpha_, double beta_, double sigma_sq_)
      : mu(mu_), alpha(alpha_), beta(beta_), sigma_sq(sigma_sq_) {}

  static ModelParams from_branching(double theta_br, double omega, double mu_,
                                    double sigma_sq_) {
    return ModelParams(mu_, theta_br * omega, omega, sigma_sq_);
  }

  bool anisotropic() const { return sigma_x_sq.has_value() && sigma_y_sq.has_value(); }
  double sx_sq() const { return anisotropic() ? *sigma_x_sq : sigma_sq; }
  double sy_sq() const { return anisotropic() ? *sigma_y_sq : sigma_sq; }

  double theta_br() const { return alpha / beta; }
  double omega() const { return beta; }

  /// Spatial integral of the (unnormalized) triggering Gaussian.
  double spatial_mass() const;
  /// Expected offspring per event, A*B = (alpha/beta) * spatial_mass.
  double branching_ratio() const;
  bool subcritical() const { return branching_ratio() < 1.0; }

  /// Throws NumericalError unless every component is strictly positive.
  void validate() const;
};

/// Fixed background geometry: Gaussian centers, their common scale sigma0,
/// and the axis-aligned city-limits rectangle.  Never estimated.
struct BackgroundConfig {
  std::vector<Point> centers;
  double sigma0 = 1.0;
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;

  /// The 14 canonical centers (+-6, {0, +-10, +-20, +-30}) with sigma0 = 4.5
  /// on a domain tightly covering them.
  static BackgroundConfig default_config();

  /// Centers as given but with effectively unbounded domain (no discards).
  static BackgroundConfig all_containing(std::vector<Point> centers, double sigma0);

  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  /// Sum over centers of the Gaussian mass inside the domain rectangle.
  double domain_mass() const;

  void validate() const;
};

struct Event {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  // -1 background, -2 parent not retained in this stream, >= 0 index of the
  // parent event within the same stream.  Diagnostics only.
  int parent_index = -1;
};

/// Time-ordered event sequence over an observation window.
struct EventStream {
  std::vector<Event> events;
  double horizon = 0.0;                   // observation window end T (0 = unset)
  std::optional<int> truncation_count;    // max-event cap N, when count-limited
  std::vector<std::uint8_t> retained;     // optional per-event flags after thinning

  std::size_t size() const { return events.size(); }
  /// End of the observation window: the horizon when set, else the last
  /// event time (count-limited streams).
  double window_end() const;

  /// Strictly increasing timestamps (exact duplicates are corrupt input),
  /// finite coordinates.
  void validate() const;
};

// ---- closed-form model quantities ----------------------------------------

/// Background intensity mu * sum_i N(p; c_i, sigma0^2 I); time-constant.
double background_intensity(Point p, double mu, const BackgroundConfig& bg);

/// Triggering kernel alpha * exp(-beta dt) * exp(-dx^2/2sx^2 - dy^2/2sy^2).
/// Strictly causal: dt <= 0 is rejected.
double triggering_kernel(double dt, double dx, double dy, const ModelParams& params);

/// Eq.-style conditional intensity: background plus triggering sums over all
/// events strictly before t.
double conditional_intensity(double t, Point p, const EventStream& history,
                             const ModelParams& params, const BackgroundConfig& bg);

/// Intensity of the temporal projection: mu * n_centers plus
/// B * alpha * exp(-beta (t - t_i)) terms, B the spatial kernel mass.
double temporal_projection_intensity(double t, const EventStream& history,
                                     const ModelParams& params,
                                     const BackgroundConfig& bg);

/// Closed-form integral of the temporal projection over [0, t].
double temporal_compensator(double t, const EventStream& history,
                            const ModelParams& params, const BackgroundConfig& bg);

/// Compensator residuals Lambda(t_i) - Lambda(t_{i-1}) of a stream, which are
/// iid Exp(1) for un-thinned data from the model.
std::vector<double> compensator_residuals(const EventStream& stream,
                                          const ModelParams& params,
                                          const BackgroundConfig& bg);

}  // namespace hawkes

#endif
