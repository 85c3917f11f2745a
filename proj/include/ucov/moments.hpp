#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace ucov {

/// Welford accumulator with Chan's pairwise merge. Merging partials in a
/// fixed order gives results independent of how work was split.
struct ScalarMoments {
  std::int64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const ScalarMoments& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(count + o.count);
    const double delta = o.mean - mean;
    mean += delta * static_cast<double>(o.count) / n;
    m2 += o.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(o.count) / n;
    count += o.count;
  }

  /// Unbiased sample variance (0 for fewer than two observations).
  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
  double se() const { return count > 0 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0; }
};

/// Entrywise version of ScalarMoments for fixed-shape matrices.
struct MatrixMoments {
  std::int64_t count = 0;
  Eigen::MatrixXd mean;
  Eigen::MatrixXd m2;

  MatrixMoments() = default;
  MatrixMoments(Eigen::Index rows, Eigen::Index cols)
      : mean(Eigen::MatrixXd::Zero(rows, cols)), m2(Eigen::MatrixXd::Zero(rows, cols)) {}

  void add(const Eigen::MatrixXd& x) {
    ++count;
    const Eigen::MatrixXd delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta.cwiseProduct(x - mean);
  }

  void merge(const MatrixMoments& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(count + o.count);
    const Eigen::MatrixXd delta = o.mean - mean;
    mean += delta * (static_cast<double>(o.count) / n);
    m2 += o.m2 + delta.cwiseProduct(delta) *
                     (static_cast<double>(count) * static_cast<double>(o.count) / n);
    count += o.count;
  }

  Eigen::MatrixXd variance() const {
    if (count < 2) return Eigen::MatrixXd::Zero(mean.rows(), mean.cols());
    return m2 / static_cast<double>(count - 1);
  }
  Eigen::MatrixXd se() const {
    if (count < 1) return Eigen::MatrixXd::Zero(mean.rows(), mean.cols());
    return (variance() / static_cast<double>(count)).cwiseSqrt();
  }
};

}  // namespace ucov
