#include "ucov/errors.hpp"
#include "ucov/tensor.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ucov;

namespace {

const SpaceDescriptor kL2(2, NormKind::L2);
const SpaceDescriptor kL1(2, NormKind::L1);

TensorRep grid_tensor(const SpaceDescriptor& s, std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd g(s.dim, s.dim);
  int i = 0;
  for (const auto& r : rows) {
    int j = 0;
    for (double v : r) g(i, j++) = v;
    ++i;
  }
  return TensorRep(s, g);
}

TensorRep identity2(const SpaceDescriptor& s = kL2) { return TensorRep(s, Eigen::MatrixXd::Identity(2, 2)); }

// Independent brute force for sup_{s,t in {-1,1}^d} |s^T G t|: plain loops over
// both sign vectors, no Gray code and no best response.
double brute_sign_pairs(const Eigen::MatrixXd& g) {
  const int d = static_cast<int>(g.rows());
  double best = 0.0;
  for (int a = 0; a < (1 << d); ++a) {
    for (int b = 0; b < (1 << d); ++b) {
      double s = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          s += ((a >> i) & 1 ? 1.0 : -1.0) * g(i, j) * ((b >> j) & 1 ? 1.0 : -1.0);
      best = std::max(best, std::abs(s));
    }
  }
  return best;
}

}  // namespace

TEST(Outer, Examples) {
  EXPECT_EQ(outer(Element(kL2, {1, 0}), Element(kL2, {0, 1})).grid(), grid_tensor(kL2, {{0, 1}, {0, 0}}).grid());
  EXPECT_EQ(outer(Element(kL2, {1, 1}), Element(kL2, {1, 1})).grid(), Eigen::MatrixXd::Ones(2, 2));
  EXPECT_EQ(outer(Element(kL2, {2, 0}), Element(kL2, {0, 3})).grid(), grid_tensor(kL2, {{0, 6}, {0, 0}}).grid());
  const auto t = outer(Element(kL2, {2, 0}), Element(kL2, {0, 3}));
  ASSERT_TRUE(t.rank_terms().has_value());
  EXPECT_EQ(t.rank_terms()->size(), 1u);
}

TEST(Outer, MismatchedSpaces) {
  EXPECT_THROW(outer(Element(kL2, {1, 0}), Element(kL1, {0, 1})), DimensionError);
  EXPECT_THROW(outer(Element(kL2, {1, 0}), Element(SpaceDescriptor(3, NormKind::L2), {0, 1, 0})), DimensionError);
}

TEST(TensorRep, RejectsBadGrids) {
  EXPECT_THROW(TensorRep(kL2, Eigen::MatrixXd::Zero(2, 3)), DimensionError);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 2);
  g(0, 0) = std::nan("");
  EXPECT_ANY_THROW(TensorRep(kL2, g));
}

TEST(TensorAxpy, Examples) {
  const auto zero = TensorRep::zero(kL2);
  EXPECT_EQ(tensor_axpy(1.0, identity2(), zero).grid(), Eigen::MatrixXd::Identity(2, 2));
  const auto i2 = identity2();
  EXPECT_EQ(tensor_axpy(-1.0, i2, i2).grid(), Eigen::MatrixXd::Zero(2, 2));
  EXPECT_EQ(tensor_axpy(0.5, grid_tensor(kL2, {{2, 0}, {0, 2}}), zero).grid(), Eigen::MatrixXd::Identity(2, 2));
}

TEST(TensorAxpy, RankTermsConcatenateOrDrop) {
  const auto a = outer(Element(kL2, {1, 2}), Element(kL2, {3, 4}));
  const auto b = outer(Element(kL2, {0, 1}), Element(kL2, {1, 0}));
  const auto sum = tensor_axpy(-2.0, b, a);
  ASSERT_TRUE(sum.rank_terms().has_value());
  ASSERT_EQ(sum.rank_terms()->size(), 2u);
  Eigen::MatrixXd rebuilt = Eigen::MatrixXd::Zero(2, 2);
  for (const auto& term : *sum.rank_terms()) rebuilt += term.x.coords() * term.y.coords().transpose();
  EXPECT_LE((rebuilt - sum.grid()).cwiseAbs().maxCoeff(), 1e-10);

  EXPECT_FALSE(tensor_axpy(1.0, identity2(), a).rank_terms().has_value());
  EXPECT_THROW(tensor_axpy(1.0, identity2(kL1), a), DimensionError);
}

TEST(PairBilinear, Examples) {
  const auto t = outer(Element(kL2, {1, 2}), Element(kL2, {3, 4}));
  EXPECT_DOUBLE_EQ(pair_bilinear(t, Element(kL2, {1, 0}), Element(kL2, {0, 1})), 4.0);
  EXPECT_DOUBLE_EQ(pair_bilinear(identity2(), Element(kL2, {1, 1}), Element(kL2, {1, 1})), 2.0);
  EXPECT_DOUBLE_EQ(pair_bilinear(grid_tensor(kL2, {{0, 1}, {0, 0}}), Element(kL2, {1, 0}), Element(kL2, {0, 1})), 1.0);
  EXPECT_THROW(pair_bilinear(identity2(), Element(SpaceDescriptor(3, NormKind::L2), {1, 0, 0}), Element(kL2, {0, 1})),
               DimensionError);
}

TEST(PairBilinear, RankOneFactorsProperty) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const SpaceDescriptor s(support::uniform_int(rng, 1, 6), NormKind::L2);
    const auto x = support::random_element(rng, s);
    const auto y = support::random_element(rng, s);
    const auto u = support::random_element(rng, s);
    const auto v = support::random_element(rng, s);
    const double want = inner(u, x) * inner(v, y);
    EXPECT_NEAR(pair_bilinear(outer(x, y), u, v), want, 1e-12 * std::max(1.0, std::abs(want))) << "trial " << trial;
  }
}

TEST(HilbertNorm, Examples) {
  EXPECT_NEAR(hilbert_norm(identity2()), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(hilbert_norm(outer(Element(kL2, {3, 4}), Element(kL2, {1, 0}))), 5.0, 1e-15);
  EXPECT_EQ(hilbert_norm(TensorRep::zero(kL2)), 0.0);
  EXPECT_THROW(hilbert_norm(identity2(kL1)), UnsupportedOperation);
}

TEST(InjectiveNorm, Examples) {
  EXPECT_NEAR(injective_norm(identity2()).value, 1.0, 1e-12);
  EXPECT_NEAR(injective_norm(outer(Element(kL2, {3, 4}), Element(kL2, {1, 0}))).value, 5.0, 1e-12);
  const auto r = injective_norm(grid_tensor(kL1, {{1, -1}, {-1, 1}}));
  EXPECT_NEAR(r.value, 4.0, 1e-12);
  EXPECT_EQ(r.method, NormMethod::Exact);
}

TEST(InjectiveNorm, L1MatchesBruteForceSignPairs) {
  Rng rng(12);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = support::uniform_int(rng, 1, 6);
    const Eigen::MatrixXd g = support::random_grid(rng, d, d);
    const double got = injective_norm(TensorRep(SpaceDescriptor(d, NormKind::L1), g)).value;
    EXPECT_NEAR(got, brute_sign_pairs(g), 1e-10 * std::max(1.0, got)) << "trial " << trial;
  }
}

TEST(InjectiveNorm, L1SizeLimit) {
  const SpaceDescriptor big(kMaxVertexEnumerationDim + 1, NormKind::L1);
  const TensorRep t(big, Eigen::MatrixXd::Identity(big.dim, big.dim));
  EXPECT_THROW(injective_norm(t), SizeLimitError);
  const auto h = injective_norm_heuristic(t);
  EXPECT_EQ(h.method, NormMethod::Heuristic);
  // sup of s^T I t over sign vectors is d.
  EXPECT_NEAR(h.value, static_cast<double>(big.dim), 1e-9);
}

TEST(InjectiveNorm, HeuristicNeverExceedsExact) {
  Rng rng(13);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = support::uniform_int(rng, 1, 6);
    const SpaceDescriptor s(d, support::random_norm_kind(rng));
    const TensorRep t(s, support::random_grid(rng, d, d));
    const double exact = injective_norm(t).value;
    const double heur = injective_norm_heuristic(t, {8, static_cast<std::uint64_t>(trial)}).value;
    EXPECT_LE(heur, exact * (1.0 + 1e-10)) << "trial " << trial << " kind " << to_string(s.norm_kind);
    EXPECT_GE(heur, 0.0);
  }
}

TEST(InjectiveNorm, L2ProbeCrossValidation) {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = support::uniform_int(rng, 1, 4);
    const Eigen::MatrixXd g = support::random_grid(rng, d, d);
    const double exact = injective_norm(TensorRep(SpaceDescriptor(d, NormKind::L2), g)).value;
    double probe = 0.0;
    Eigen::VectorXd best_v = Eigen::VectorXd::Unit(d, 0);
    for (int k = 0; k < 10000; ++k) {
      const Eigen::VectorXd u = support::random_vector(rng, d).normalized();
      const Eigen::VectorXd v = support::random_vector(rng, d).normalized();
      const double value = std::abs(u.dot(g * v));
      if (value > probe) {
        probe = value;
        best_v = v;
      }
    }
    EXPECT_LE(probe, exact * (1.0 + 1e-12)) << "trial " << trial;
    // Alternating maximization from the best probe climbs to the top pair.
    Eigen::VectorXd v = best_v;
    double climbed = probe;
    for (int it = 0; it < 2000; ++it) {
      const Eigen::VectorXd u = (g * v).normalized();
      v = (g.transpose() * u).normalized();
      climbed = std::abs(u.dot(g * v));
    }
    EXPECT_NEAR(climbed, exact, 1e-9 * std::max(1.0, exact)) << "trial " << trial << " d " << d;
  }
}

TEST(ProjectiveNorm, Examples) {
  EXPECT_NEAR(projective_norm(identity2()).value, 2.0, 1e-12);
  EXPECT_NEAR(projective_norm(outer(Element(kL2, {3, 4}), Element(kL2, {1, 0}))).value, 5.0, 1e-12);
  EXPECT_NEAR(projective_norm(grid_tensor(kL1, {{1, -1}, {-1, 1}})).value, 4.0, 1e-12);
}

TEST(ProjectiveNorm, IdentityNotBeatenByRandomTwoTermDecompositions) {
  // I = a b^T + c e^T with a, c arbitrary and [b e] = [a c]^{-T}.
  Rng rng(15);
  double best = 1e300;
  for (int k = 0; k < 5000; ++k) {
    const Eigen::Matrix2d left = support::random_grid(rng, 2, 2);
    if (std::abs(left.determinant()) < 1e-3) continue;
    const Eigen::Matrix2d right = left.inverse().transpose();
    const double cost = left.col(0).norm() * right.col(0).norm() + left.col(1).norm() * right.col(1).norm();
    EXPECT_LE((left * right.transpose() - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff(), 1e-8);
    best = std::min(best, cost);
  }
  EXPECT_GE(best, 2.0 - 1e-12);
  EXPECT_LT(best, 2.1);
}

TEST(ProjectiveNorm, LinfBoundsAndRankOneTag) {
  Rng rng(16);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = support::uniform_int(rng, 1, 5);
    const SpaceDescriptor s(d, NormKind::Linf);
    const TensorRep t(s, support::random_grid(rng, d, d));
    const auto pi = projective_norm(t);
    EXPECT_GE(pi.value, injective_norm(t).value * (1.0 - 1e-12)) << "trial " << trial;
    // The row decomposition sum_i e_i (x) row_i is always available.
    EXPECT_LE(pi.value, t.grid().rowwise().lpNorm<Eigen::Infinity>().sum() * (1.0 + 1e-12));
  }
  const SpaceDescriptor s(3, NormKind::Linf);
  const auto x = Element(s, {1.0, -0.5, 0.25});
  const auto y = Element(s, {2.0, 1.0, -3.0});
  const auto pi = projective_norm(outer(x, y));
  EXPECT_EQ(pi.method, NormMethod::Exact);
  EXPECT_NEAR(pi.value, norm(x) * norm(y), 1e-9 * norm(x) * norm(y));
  EXPECT_EQ(projective_norm(TensorRep::zero(s)).value, 0.0);
}

TEST(TensorNorms, RankOneEqualityExactPaths) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const SpaceDescriptor s(support::uniform_int(rng, 1, 6), support::random_norm_kind(rng));
    const auto x = support::random_element(rng, s);
    const auto y = support::random_element(rng, s);
    const auto t = outer(x, y);
    const double want = norm(x) * norm(y);
    const auto eps = injective_norm(t);
    const auto pi = projective_norm(t);
    ASSERT_EQ(eps.method, NormMethod::Exact);
    EXPECT_LE(support::rel_diff(eps.value, want), 1e-9) << "trial " << trial << " " << to_string(s.norm_kind);
    if (pi.method == NormMethod::Exact) EXPECT_LE(support::rel_diff(pi.value, want), 1e-9) << "trial " << trial;
  }
}

TEST(TensorNorms, OrderingOnHilbertTensors) {
  Rng rng(18);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = support::uniform_int(rng, 1, 8);
    const TensorRep t(SpaceDescriptor(d, NormKind::L2), support::random_grid(rng, d, d));
    const double eps = injective_norm(t).value;
    const double hs = hilbert_norm(t);
    const double pi = projective_norm(t).value;
    EXPECT_LE(eps, hs + 1e-10) << "trial " << trial;
    EXPECT_LE(hs, pi + 1e-10) << "trial " << trial;
  }
}

TEST(SingularValues, SortedAndCutoff) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 3);
  g(0, 0) = 1.0;
  g(1, 1) = 3.0;
  g(2, 2) = 1e-15;
  const auto sv = singular_values(g);
  EXPECT_NEAR(sv[0], 3.0, 1e-14);
  EXPECT_NEAR(sv[1], 1.0, 1e-14);
  EXPECT_EQ(sv[2], 0.0);
}
