#pragma once

#include <span>
#include <vector>

namespace ucov::stats {

double normal_cdf(double x);

/// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_sf(double lambda);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  /// Effective sample size used for the p-value.
  double n_eff = 0.0;
};

/// One-sample test against N(mean, variance); p-value from the asymptotic
/// distribution with Stephens' finite-n correction.
KsResult ks_test_normal(std::span<const double> values, double mean, double variance);

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

struct Summary {
  double mean = 0.0;
  /// Unbiased.
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

Summary summarize(std::span<const double> values);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Slope of log(y) against log(x).
double log_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace ucov::stats
