#pragma once

#include "ucov/spaces.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace ucov {

struct RankTerm {
  Element x;
  Element y;
};

/// Element of B (x) B: the coefficient grid on e_i (x) e_j, plus an optional
/// finite decomposition sum_j x_j (x) y_j that reproduces the grid.
class TensorRep {
 public:
  TensorRep(SpaceDescriptor space, Eigen::MatrixXd grid,
            std::optional<std::vector<RankTerm>> rank_terms = std::nullopt);

  static TensorRep zero(const SpaceDescriptor& space);

  const SpaceDescriptor& space() const { return space_; }
  const Eigen::MatrixXd& grid() const { return grid_; }
  int dim() const { return space_.dim; }
  const std::optional<std::vector<RankTerm>>& rank_terms() const { return rank_terms_; }

 private:
  SpaceDescriptor space_;
  Eigen::MatrixXd grid_;
  std::optional<std::vector<RankTerm>> rank_terms_;
};

TensorRep outer(const Element& x, const Element& y);

/// acc + a * t. Rank terms survive only when both operands carry them.
TensorRep tensor_axpy(double a, const TensorRep& t, const TensorRep& acc);

/// u^T G v: the bilinear-form action of t on a pair of dual vectors.
double pair_bilinear(const TensorRep& t, const Element& u, const Element& v);

/// Frobenius norm; the norm induced by the Hilbert tensor inner product.
double hilbert_norm(const TensorRep& t);

enum class NormMethod { Exact, Heuristic };
std::string_view to_string(NormMethod method);

struct NormResult {
  double value = 0.0;
  NormMethod method = NormMethod::Exact;
};

struct HeuristicOptions {
  int restarts = 32;
  std::uint64_t seed = 0x5eed;
};

/// Largest d for which the L1 injective norm is computed by sign-vertex
/// enumeration.
inline constexpr int kMaxVertexEnumerationDim = 20;

/// Injective norm eps(t): sup of |phi^T G psi| over the dual unit balls.
/// L2: spectral norm. L1: max over sign vectors (throws SizeLimitError for
/// d > 20). Linf: max |G_ij| (the l1 dual ball has vertices +-e_i).
NormResult injective_norm(const TensorRep& t);

/// Alternating maximization over the dual unit balls with random restarts.
/// Always a lower bound of the injective norm; tagged heuristic.
NormResult injective_norm_heuristic(const TensorRep& t, const HeuristicOptions& opts = {});

/// Projective norm pi(t): inf of sum ||x_j|| ||y_j|| over decompositions.
/// L2: nuclear norm. L1: entrywise l1 sum. Linf: best decomposition found
/// (upper bound), tagged exact only when it meets the injective lower bound.
NormResult projective_norm(const TensorRep& t, const HeuristicOptions& opts = {});

/// Singular values in decreasing order, with values below 1e-12 * largest
/// set to zero.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& grid);

}  // namespace ucov
