#include "ucov/stats.hpp"

#include "ucov/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ucov::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.0) {
    // Jacobi-transformed series converges fast for small lambda:
    // P(K <= l) = sqrt(2 pi)/l * sum_{k odd} exp(-k^2 pi^2 / (8 l^2))
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int k = 1; k < 200; k += 2) {
      const double term = std::exp(-k * k * pi2 / (8.0 * lambda * lambda));
      cdf += term;
      if (term < 1e-17) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sf = 0.0;
  for (int k = 1; k < 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sf += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(sf, 0.0, 1.0);
}

namespace {

double corrected_p(double d, double n_eff) {
  const double rn = std::sqrt(n_eff);
  return kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d);
}

}  // namespace

KsResult ks_test_normal(std::span<const double> values, double mean, double variance) {
  if (values.empty()) throw EmptyInput("KS test on an empty sample");
  if (!(variance > 0.0)) throw InvalidConfig("KS reference variance must be positive");
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  const double sd = std::sqrt(variance);
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf((x[i] - mean) / sd);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return {d, corrected_p(d, n), n};
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw EmptyInput("two-sample KS test needs two nonempty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    // step past every observation equal to t in both samples
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double n_eff = na * nb / (na + nb);
  return {d, corrected_p(d, n_eff), n_eff};
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("summary of an empty sample");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double v : values) {
    const double e = v - mean;
    m2 += e * e;
    m3 += e * e * e;
    m4 += e * e * e * e;
  }
  Summary s;
  s.mean = mean;
  s.variance = values.size() > 1 ? m2 / (n - 1.0) : 0.0;
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 > 0.0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return s;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidConfig("line fit needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidConfig("line fit needs at least two distinct x values");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidConfig("log-log fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lx, ly).slope;
}

}  // namespace ucov::stats
