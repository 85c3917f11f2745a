#pragma once

// Hand-rolled random inputs for property tests. Every generator takes an
// explicit Rng so failures replay from the seed printed by the test.

#include "ucov/rng.hpp"
#include "ucov/spaces.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace support {

inline int uniform_int(ucov::Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline Eigen::VectorXd random_vector(ucov::Rng& rng, int d, double scale = 1.0) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

inline Eigen::MatrixXd random_grid(ucov::Rng& rng, int rows, int cols) {
  Eigen::MatrixXd g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = rng.normal();
  return g;
}

inline ucov::Element random_element(ucov::Rng& rng, const ucov::SpaceDescriptor& space, double scale = 1.0) {
  return ucov::Element(space, random_vector(rng, space.dim, scale));
}

inline ucov::NormKind random_norm_kind(ucov::Rng& rng) {
  switch (uniform_int(rng, 0, 2)) {
    case 0: return ucov::NormKind::L1;
    case 1: return ucov::NormKind::L2;
    default: return ucov::NormKind::Linf;
  }
}

inline ucov::Sample gaussian_sample(ucov::Rng& rng, int n, int d, ucov::NormKind norm = ucov::NormKind::L2) {
  return ucov::Sample(ucov::SpaceDescriptor(d, norm), random_grid(rng, n, d));
}

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

// Largest entrywise relative difference, measured against the larger grid scale.
inline double max_rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-300});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace support
