#ifndef HAWKES_STATS_HPP
#define HAWKES_STATS_HPP

#include <vector>

namespace hawkes {

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// Kolmogorov distribution survival function Q(t) = 2 sum (-1)^{k-1} e^{-2k^2 t^2}.
double kolmogorov_q(double t);

/// One-sample KS test against Exp(1); asymptotic p-value (Stephens).
KsResult ks_test_exp1(std::vector<double> values);

/// Two-sample KS test.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Quantile of a sample by linear interpolation, q in [0,1].
double sample_quantile(std::vector<double> values, double q);

double mean(const std::vector<double>& v);
double sample_std(const std::vector<double>& v);

}  // namespace hawkes

#endif
