#include "hawkes/model.hpp"

#include <cmath>

#include "hawkes/rng.hpp"

namespace hawkes {

double ModelParams::spatial_mass() const { return 2.0 * M_PI * std::sqrt(sx_sq() * sy_sq()); }

double ModelParams::branching_ratio() const { return (alpha / beta) * spatial_mass(); }

void ModelParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw NumericalError(std::string("ModelParams: ") + name + " must be strictly positive");
  };
  positive(mu, "mu");
  positive(alpha, "alpha");
  positive(beta, "beta");
  positive(sigma_sq, "sigma_sq");
  if (sigma_x_sq) positive(*sigma_x_sq, "sigma_x_sq");
  if (sigma_y_sq) positive(*sigma_y_sq, "sigma_y_sq");
  if (sigma_x_sq.has_value() != sigma_y_sq.has_value())
    throw NumericalError("ModelParams: anisotropic form needs both sigma_x_sq and sigma_y_sq");
}

BackgroundConfig BackgroundConfig::default_config() {
  BackgroundConfig bg;
  for (double sx : {-6.0, 6.0})
    for (double cy : {-30.0, -20.0, -10.0, 0.0, 10.0, 20.0, 30.0}) bg.centers.push_back({sx, cy});
  bg.sigma0 = 4.5;
  // Tight cover of the centers plus margin; yields sensible 3 x 4.5 cells on
  // the 7 x 16 evaluation grid.
  bg.x_min = -10.5;
  bg.x_max = 10.5;
  bg.y_min = -36.0;
  bg.y_max = 36.0;
  return bg;
}

BackgroundConfig BackgroundConfig::all_containing(std::vector<Point> centers, double sigma0) {
  BackgroundConfig bg;
  bg.centers = std::move(centers);
  bg.sigma0 = sigma0;
  double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
  for (const auto& c : bg.centers) {
    lo_x = std::min(lo_x, c.x);
    hi_x = std::max(hi_x, c.x);
    lo_y = std::min(lo_y, c.y);
    hi_y = std::max(hi_y, c.y);
  }
  // 12 sigma0 margin: discard probability is negligible at double precision.
  bg.x_min = lo_x - 12.0 * sigma0;
  bg.x_max = hi_x + 12.0 * sigma0;
  bg.y_min = lo_y - 12.0 * sigma0;
  bg.y_max = hi_y + 12.0 * sigma0;
  return bg;
}

double BackgroundConfig::domain_mass() const {
  double total = 0.0;
  for (const auto& c : centers) {
    double mx = normal_cdf((x_max - c.x) / sigma0) - normal_cdf((x_min - c.x) / sigma0);
    double my = normal_cdf((y_max - c.y) / sigma0) - normal_cdf((y_min - c.y) / sigma0);
    total += mx * my;
  }
  return total;
}

void BackgroundConfig::validate() const {
  if (centers.empty()) throw ConfigError("BackgroundConfig: empty center list");
  if (!(sigma0 > 0.0)) throw ConfigError("BackgroundConfig: sigma0 must be positive");
  if (!(x_max > x_min) || !(y_max > y_min))
    throw ConfigError("BackgroundConfig: degenerate domain bounds");
}

double EventStream::window_end() const {
  if (horizon > 0.0) return horizon;
  return events.empty() ? 0.0 : events.back().t;
}

void EventStream::validate() const {
  double prev = -1.0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (!(std::isfinite(e.t) && std::isfinite(e.x) && std::isfinite(e.y)))
      throw DataError("EventStream: non-finite event at index " + std::to_string(i));
    if (e.t < 0.0) throw DataError("EventStream: negative time at index " + std::to_string(i));
    if (i > 0 && !(e.t > prev))
      throw DataError("EventStream: timestamps not strictly increasing at index " +
                      std::to_string(i) + " (exact ties are corrupt input)");
    prev = e.t;
  }
  if (!retained.empty() && retained.size() != events.size())
    throw DataError("EventStream: retained flags do not match event count");
}

double background_intensity(Point p, double mu, const BackgroundConfig& bg) {
  const double two_s0sq = 2.0 * bg.sigma0 * bg.sigma0;
  const double norm = 1.0 / (M_PI * two_s0sq);
  double sum = 0.0;
  for (const auto& c : bg.centers) {
    double dx = p.x - c.x, dy = p.y - c.y;
    sum += norm * std::exp(-(dx * dx + dy * dy) / two_s0sq);
  }
  return mu * sum;
}

double triggering_kernel(double dt, double dx, double dy, const ModelParams& params) {
  if (!(dt > 0.0)) throw NumericalError("triggering_kernel: dt must be strictly positive");
  double expo = -params.beta * dt - dx * dx / (2.0 * params.sx_sq()) -
                dy * dy / (2.0 * params.sy_sq());
  return params.alpha * std::exp(expo);
}

double conditional_intensity(double t, Point p, const EventStream& history,
                             const ModelParams& params, const BackgroundConfig& bg) {
  double lambda = background_intensity(p, params.mu, bg);
  for (const auto& e : history.events) {
    if (e.t >= t) break;
    lambda += triggering_kernel(t - e.t, p.x - e.x, p.y - e.y, params);
  }
  return lambda;
}

double temporal_projection_intensity(double t, const EventStream& history,
                                     const ModelParams& params, const BackgroundConfig& bg) {
  // Each background Gaussian integrates to one over the plane.
  double lambda = params.mu * static_cast<double>(bg.centers.size());
  const double big = params.spatial_mass();
  for (const auto& e : history.events) {
    if (e.t >= t) break;
    lambda += big * params.alpha * std::exp(-params.beta * (t - e.t));
  }
  return lambda;
}

double temporal_compensator(double t, const EventStream& history, const ModelParams& params,
                            const BackgroundConfig& bg) {
  double acc = params.mu * static_cast<double>(bg.centers.size()) * t;
  const double big = params.spatial_mass();
  const double ab_over_beta = params.alpha / params.beta;
  for (const auto& e : history.events) {
    if (e.t >= t) break;
    acc += big * ab_over_beta * (1.0 - std::exp(-params.beta * (t - e.t)));
  }
  return acc;
}

std::vector<double> compensator_residuals(const EventStream& stream, const ModelParams& params,
                                          const BackgroundConfig& bg) {
  std::vector<double> out;
  out.reserve(stream.size());
  double prev = 0.0;
  for (const auto& e : stream.events) {
    double lam = temporal_compensator(e.t, stream, params, bg);
    out.push_back(lam - prev);
    prev = lam;
  }
  return out;
}

}  // namespace hawkes
