#include "hawkes/rng.hpp"

#include <cmath>

namespace hawkes {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_key(std::uint64_t seed, std::uint64_t channel, std::uint64_t index) {
  std::uint64_t h = splitmix64(seed ^ 0xA5A5A5A5A5A5A5A5ULL);
  h = splitmix64(h ^ splitmix64(channel));
  h = splitmix64(h ^ splitmix64(index));
  return h;
}

std::uint64_t background_event_id(std::uint64_t j) {
  return splitmix64(0xB16B00B5ULL ^ splitmix64(j));
}

std::uint64_t child_event_id(std::uint64_t parent_id, std::uint64_t k) {
  return splitmix64(parent_id ^ splitmix64(k + 1));
}

namespace {

double acklam_quantile(double p) {
  // Rational approximation of the N(0,1) quantile (P. Acklam, 2003).
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw NumericalError("normal_quantile: p outside (0,1)");
  double x = acklam_quantile(p);
  // One Halley refinement step.
  double e = normal_cdf(x) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

int poisson_quantile(double u, double lambda) {
  if (lambda < 0.0) throw NumericalError("poisson_quantile: negative rate");
  if (lambda == 0.0) return 0;
  double p = std::exp(-lambda);
  double cum = p;
  int k = 0;
  // Counts well beyond any subcritical offspring law indicate misuse.
  const int kmax = 10000;
  while (u > cum && k < kmax) {
    ++k;
    p *= lambda / k;
    cum += p;
  }
  return k;
}

double BaseNoise::uniform(Channel c, std::uint64_t index) const {
  if (index >= budget_)
    throw NumericalError("BaseNoise: channel draw budget exhausted at index " +
                         std::to_string(index));
  std::uint64_t z = mix_key(seed_, static_cast<std::uint64_t>(c), index);
  // 53-bit mantissa, offset by half a ulp so the result is strictly in (0,1).
  return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
}

double BaseNoise::normal(Channel c, std::uint64_t index) const {
  return normal_quantile(uniform(c, index));
}

}  // namespace hawkes
