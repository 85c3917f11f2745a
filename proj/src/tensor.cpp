#include "ucov/tensor.hpp"

#include "ucov/errors.hpp"
#include "ucov/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace ucov {

namespace {

void require_same_space(const SpaceDescriptor& a, const SpaceDescriptor& b, const char* op) {
  if (!(a == b)) {
    throw DimensionError(std::string(op) + ": tensors live over different spaces");
  }
}

// max over s in {+-1}^d of ||G^T s||_1, which equals max over s, t of
// s^T G t. Gray-code walk with s_0 fixed to +1 (the objective is even).
double sign_vertex_max(const Eigen::MatrixXd& g) {
  const int d = static_cast<int>(g.rows());
  if (d > kMaxVertexEnumerationDim) {
    throw SizeLimitError("sign-vertex enumeration is limited to d <= " +
                         std::to_string(kMaxVertexEnumerationDim) + " (got " + std::to_string(d) +
                         "); use injective_norm_heuristic");
  }
  Eigen::VectorXd w = g.colwise().sum().transpose();  // s = all ones
  std::vector<double> s(static_cast<std::size_t>(d), 1.0);
  double best = w.lpNorm<1>();
  const std::uint64_t steps = d > 1 ? (std::uint64_t{1} << (d - 1)) : 1;
  for (std::uint64_t k = 1; k < steps; ++k) {
    // flip the bit that changes between Gray codes k-1 and k, offset by one
    // so row 0 keeps its + sign.
    const int bit = std::countr_zero(k) + 1;
    w -= 2.0 * s[static_cast<std::size_t>(bit)] * g.row(bit).transpose();
    s[static_cast<std::size_t>(bit)] = -s[static_cast<std::size_t>(bit)];
    best = std::max(best, w.lpNorm<1>());
  }
  return best;
}

// Maximizer of phi^T w over the unit ball of the dual of `kind`, and the
// attained value (the dual-of-dual norm of w).
double best_response(NormKind kind, const Eigen::VectorXd& w, Eigen::VectorXd& out) {
  out.setZero(w.size());
  switch (kind) {
    case NormKind::L1: {  // dual ball is the l_inf cube
      for (Eigen::Index i = 0; i < w.size(); ++i) out[i] = w[i] >= 0.0 ? 1.0 : -1.0;
      return w.lpNorm<1>();
    }
    case NormKind::L2: {
      const double r = w.norm();
      if (r > 0.0) out = w / r;
      else out[0] = 1.0;
      return r;
    }
    case NormKind::Linf: {  // dual ball is the l1 cross-polytope
      Eigen::Index arg = 0;
      w.cwiseAbs().maxCoeff(&arg);
      out[arg] = w[arg] >= 0.0 ? 1.0 : -1.0;
      return std::abs(w[arg]);
    }
  }
  return 0.0;
}

double cross_norm_cost(NormKind kind, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  switch (kind) {
    case NormKind::L1: return x.lpNorm<1>() * y.lpNorm<1>();
    case NormKind::L2: return x.norm() * y.norm();
    case NormKind::Linf: return x.lpNorm<Eigen::Infinity>() * y.lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

// Cheapest trivial l_inf decomposition of r: by rows or by columns.
double linf_trivial_cost(const Eigen::MatrixXd& r) {
  const double by_rows = r.cwiseAbs().rowwise().maxCoeff().sum();
  const double by_cols = r.cwiseAbs().colwise().maxCoeff().sum();
  return std::min(by_rows, by_cols);
}

// Greedy rank-one peeling for l_inf (x)_pi l_inf: repeatedly subtract
// x y^T with y a sign vector and x = R y / d, as long as the cost of the
// term plus the trivial cost of the residual improves.
double linf_greedy_peel(const Eigen::MatrixXd& g, Rng& rng) {
  const int d = static_cast<int>(g.rows());
  Eigen::MatrixXd residual = g;
  double spent = 0.0;
  double current = linf_trivial_cost(residual);
  for (int step = 0; step < 4 * d; ++step) {
    double best_total = current;
    Eigen::MatrixXd best_residual;
    double best_term = 0.0;
    for (int side = 0; side < 2; ++side) {
      const Eigen::MatrixXd r = side == 0 ? Eigen::MatrixXd(residual)
                                          : Eigen::MatrixXd(residual.transpose());
      for (int attempt = 0; attempt < 4; ++attempt) {
        Eigen::VectorXd y(d);
        for (int i = 0; i < d; ++i) y[i] = rng.rademacher();
        if (attempt == 0) {
          // deterministic start: sign of the dominant column pattern
          Eigen::Index c = 0;
          r.cwiseAbs().colwise().sum().maxCoeff(&c);
          for (int i = 0; i < d; ++i) y[i] = r(i, c) >= 0.0 ? 1.0 : -1.0;
        }
        Eigen::VectorXd x;
        for (int it = 0; it < 20; ++it) {
          x = r * y / static_cast<double>(d);
          Eigen::VectorXd next = (r.transpose() * x).unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
          if (next == y) break;
          y = next;
        }
        x = r * y / static_cast<double>(d);
        const Eigen::MatrixXd rest = r - x * y.transpose();
        const double term = x.lpNorm<Eigen::Infinity>();
        const double total = term + linf_trivial_cost(rest);
        if (total < best_total - 1e-15 * std::max(1.0, best_total)) {
          best_total = total;
          best_term = term;
          best_residual = side == 0 ? rest : Eigen::MatrixXd(rest.transpose());
        }
      }
    }
    if (best_residual.size() == 0) break;
    spent += best_term;
    residual = best_residual;
    current = linf_trivial_cost(residual);
    if (current == 0.0) break;
  }
  return spent + current;
}

}  // namespace

TensorRep::TensorRep(SpaceDescriptor space, Eigen::MatrixXd grid,
                     std::optional<std::vector<RankTerm>> rank_terms)
    : space_(space), grid_(std::move(grid)), rank_terms_(std::move(rank_terms)) {
  if (grid_.rows() != space_.dim || grid_.cols() != space_.dim) {
    throw DimensionError("tensor grid must be " + std::to_string(space_.dim) + "x" +
                         std::to_string(space_.dim));
  }
  if (!grid_.allFinite()) throw InvalidConfig("tensor grid entries must be finite");
  if (rank_terms_) {
    for (const auto& term : *rank_terms_) {
      if (!(term.x.space() == space_) || !(term.y.space() == space_)) {
        throw DimensionError("rank term lives in a different space than the tensor");
      }
    }
  }
}

TensorRep TensorRep::zero(const SpaceDescriptor& space) {
  return TensorRep(space, Eigen::MatrixXd::Zero(space.dim, space.dim), std::vector<RankTerm>{});
}

TensorRep outer(const Element& x, const Element& y) {
  if (!(x.space() == y.space())) throw DimensionError("outer: factors live in different spaces");
  return TensorRep(x.space(), x.coords() * y.coords().transpose(),
                   std::vector<RankTerm>{RankTerm{x, y}});
}

TensorRep tensor_axpy(double a, const TensorRep& t, const TensorRep& acc) {
  require_same_space(t.space(), acc.space(), "tensor_axpy");
  std::optional<std::vector<RankTerm>> terms;
  if (t.rank_terms() && acc.rank_terms()) {
    terms = *acc.rank_terms();
    for (const auto& term : *t.rank_terms()) terms->push_back(RankTerm{a * term.x, term.y});
  }
  return TensorRep(acc.space(), acc.grid() + a * t.grid(), std::move(terms));
}

double pair_bilinear(const TensorRep& t, const Element& u, const Element& v) {
  if (u.dim() != t.dim() || v.dim() != t.dim()) {
    throw DimensionError("pair_bilinear: dual vectors must have dimension " + std::to_string(t.dim()));
  }
  return u.coords().dot(t.grid() * v.coords());
}

double hilbert_norm(const TensorRep& t) {
  if (!t.space().is_hilbert()) {
    throw UnsupportedOperation("hilbert_norm requires an L2 factor space, got " +
                               std::string(to_string(t.space().norm_kind)));
  }
  return t.grid().norm();
}

std::string_view to_string(NormMethod method) {
  return method == NormMethod::Exact ? "exact" : "heuristic";
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& grid) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(grid);
  Eigen::VectorXd sv = svd.singularValues();
  if (sv.size() > 0) {
    const double cut = 1e-12 * sv[0];
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] < cut) sv[i] = 0.0;
  }
  return sv;
}

NormResult injective_norm(const TensorRep& t) {
  const auto& g = t.grid();
  switch (t.space().norm_kind) {
    case NormKind::L2: {
      const Eigen::VectorXd sv = singular_values(g);
      return {sv.size() ? sv[0] : 0.0, NormMethod::Exact};
    }
    case NormKind::L1: return {sign_vertex_max(g), NormMethod::Exact};
    case NormKind::Linf: return {g.cwiseAbs().maxCoeff(), NormMethod::Exact};
  }
  return {};
}

NormResult injective_norm_heuristic(const TensorRep& t, const HeuristicOptions& opts) {
  const auto& g = t.grid();
  const NormKind kind = t.space().norm_kind;
  const int d = t.dim();
  Rng rng(derive_seed(opts.seed, {0x1A7EC7}));
  double best = 0.0;
  Eigen::VectorXd phi(d), psi(d);
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    Eigen::VectorXd start(d);
    for (int i = 0; i < d; ++i) start[i] = rng.normal();
    best_response(kind, start, psi);
    double value = 0.0;
    for (int it = 0; it < 100; ++it) {
      best_response(kind, g * psi, phi);
      const double next = best_response(kind, g.transpose() * phi, psi);
      if (next <= value * (1.0 + 1e-14)) {
        value = std::max(value, next);
        break;
      }
      value = next;
    }
    best = std::max(best, value);
  }
  return {best, NormMethod::Heuristic};
}

NormResult projective_norm(const TensorRep& t, const HeuristicOptions& opts) {
  const auto& g = t.grid();
  switch (t.space().norm_kind) {
    case NormKind::L2: return {singular_values(g).sum(), NormMethod::Exact};
    case NormKind::L1: return {g.cwiseAbs().sum(), NormMethod::Exact};
    case NormKind::Linf: break;
  }

  if (g.isZero(0.0)) return {0.0, NormMethod::Exact};

  double upper = linf_trivial_cost(g);
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double cost = 0.0;
    for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
      cost += svd.singularValues()[k] * cross_norm_cost(NormKind::Linf, svd.matrixU().col(k),
                                                        svd.matrixV().col(k));
    }
    upper = std::min(upper, cost);
  }
  if (t.rank_terms() && !t.rank_terms()->empty()) {
    double cost = 0.0;
    for (const auto& term : *t.rank_terms())
      cost += cross_norm_cost(NormKind::Linf, term.x.coords(), term.y.coords());
    upper = std::min(upper, cost);
  }
  Rng rng(derive_seed(opts.seed, {0x9E31}));
  for (int r = 0; r < std::max(1, opts.restarts); ++r) upper = std::min(upper, linf_greedy_peel(g, rng));

  // Lower bounds: eps <= pi, and pi(G) >= <G, B> / ||B|| for B = sign(G),
  // where ||B|| is the sup of x^T B y over the l_inf cubes.
  double lower = g.cwiseAbs().maxCoeff();
  if (t.dim() <= kMaxVertexEnumerationDim) {
    const Eigen::MatrixXd signs = g.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
    const double bnorm = sign_vertex_max(signs);
    if (bnorm > 0.0) lower = std::max(lower, g.cwiseAbs().sum() / bnorm);
  }
  const bool certified = upper <= lower * (1.0 + 1e-12);
  return {certified ? lower : upper, certified ? NormMethod::Exact : NormMethod::Heuristic};
}

}  // namespace ucov
