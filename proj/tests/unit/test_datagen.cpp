#include "ucov/datagen.hpp"
#include "ucov/errors.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ucov;

namespace {

struct ColumnStats {
  double mean = 0.0;
  double var = 0.0;
  double fourth = 0.0;  // E (x - mean)^4, for the se of the variance
};

ColumnStats column_stats(const Eigen::MatrixXd& rows, int col) {
  const auto x = rows.col(col);
  const double n = static_cast<double>(x.size());
  ColumnStats s;
  s.mean = x.mean();
  const Eigen::ArrayXd c = x.array() - s.mean;
  s.var = (c * c).sum() / (n - 1.0);
  s.fourth = (c * c * c * c).sum() / n;
  return s;
}

double var_se(const ColumnStats& s, double n) { return std::sqrt((s.fourth - s.var * s.var) / n); }

double autocov(const Eigen::VectorXd& x, int lag, double mean) {
  const Eigen::Index n = x.size() - lag;
  return ((x.head(n).array() - mean) * (x.tail(n).array() - mean)).sum() / static_cast<double>(n);
}

}  // namespace

TEST(DrawIid, RademacherMoments) {
  const int n = 1000000;
  const auto s = draw_iid(rademacher(), n, 81);
  const auto& x = s.rows();
  EXPECT_LE(std::abs(x.mean()), 3.0 / std::sqrt(n));
  EXPECT_TRUE((x.array().abs() == 1.0).all());
  EXPECT_DOUBLE_EQ(x.array().square().mean(), 1.0);
}

TEST(DrawIid, StudentTVariance) {
  const int n = 1000000;
  const auto s = draw_iid(student_t(5.0), n, 82);
  const auto st = column_stats(s.rows(), 0);
  EXPECT_LE(std::abs(st.var - 5.0 / 3.0), 3.0 * var_se(st, n)) << st.var;
  EXPECT_LE(std::abs(st.mean), 3.0 * std::sqrt(st.var / n));
}

TEST(DrawIid, GaussianKlSpectrum) {
  const int n = 1000000;
  const std::vector<double> eig{1.0, 0.5, 0.25};
  const auto s = draw_iid(gaussian_kl(eig), n, 83);
  ASSERT_EQ(s.space().dim, 3);
  for (int k = 0; k < 3; ++k) {
    const auto st = column_stats(s.rows(), k);
    EXPECT_LE(std::abs(st.var - eig[k]), 3.0 * var_se(st, n)) << "coordinate " << k;
  }
  EXPECT_EQ(halving_spectrum(4), (std::vector<double>{1.0, 0.5, 0.25, 0.125}));
}

TEST(DrawIid, FiniteSupportFrequencies) {
  const int n = 100000;
  const std::vector<double> probs{0.1, 0.6, 0.3};
  const auto gen = finite_support({Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 0.0),
                                   Eigen::VectorXd::Constant(1, 4.0)},
                                  probs);
  const auto s = draw_iid(gen, n, 84);
  const double values[] = {-1.0, 0.0, 4.0};
  for (int a = 0; a < 3; ++a) {
    const double freq = (s.rows().col(0).array() == values[a]).cast<double>().mean();
    EXPECT_LE(std::abs(freq - probs[a]), 3.0 * std::sqrt(probs[a] * (1 - probs[a]) / n)) << "atom " << a;
  }
}

TEST(DrawIid, Reproducible) {
  for (const auto& gen : {student_t(4.0), rademacher(), gaussian_kl({2.0, 1.0})}) {
    EXPECT_TRUE(draw_iid(gen, 500, 7).rows() == draw_iid(gen, 500, 7).rows()) << gen.describe();
    EXPECT_FALSE(draw_iid(gen, 500, 7).rows() == draw_iid(gen, 500, 8).rows()) << gen.describe();
  }
}

TEST(DrawIid, ReplicationStreamsUncorrelated) {
  const int n = 20000;
  const auto gen = gaussian_kl({1.0});
  for (std::uint64_t r = 0; r < 10; ++r) {
    const Eigen::VectorXd a = draw_iid(gen, n, derive_seed(85, {r})).rows().col(0);
    const Eigen::VectorXd b = draw_iid(gen, n, derive_seed(85, {r + 1})).rows().col(0);
    const Eigen::ArrayXd ca = a.array() - a.mean();
    const Eigen::ArrayXd cb = b.array() - b.mean();
    const double corr = (ca * cb).sum() / std::sqrt((ca * ca).sum() * (cb * cb).sum());
    EXPECT_LT(std::abs(corr), 4.0 / std::sqrt(n)) << "streams " << r << "," << r + 1;
  }
}

TEST(DrawDependent, MovingAverageAutocovariances) {
  const int n = 1000000;
  const DependentGeneratorDescriptor ma1{gaussian_kl({1.0}), {1.0, 1.0}};
  const Eigen::VectorXd x = draw_dependent(ma1, n, 86).rows().col(0);
  // se of a lag-k sample autocovariance under MA(1): sqrt(sum_j gamma_j^2 + gamma_{j+k} gamma_{j-k}) / sqrt(n).
  const double gamma[] = {2.0, 1.0, 0.0, 0.0};
  auto se_lag = [&](int k) {
    double s = 0.0;
    for (int j = -3; j <= 3; ++j) {
      auto g = [&](int h) { return std::abs(h) < 4 ? gamma[std::abs(h)] : 0.0; };
      s += g(j) * g(j) + g(j + k) * g(j - k);
    }
    return std::sqrt(s / n);
  };
  EXPECT_LE(std::abs(autocov(x, 0, 0.0) - 2.0), 3.0 * se_lag(0));
  EXPECT_LE(std::abs(autocov(x, 1, 0.0) - 1.0), 3.0 * se_lag(1));
  EXPECT_LE(std::abs(autocov(x, 2, 0.0)), 3.0 * se_lag(2));
}

TEST(DrawDependent, OrderZeroIsIid) {
  for (const auto& base : {student_t(6.0), gaussian_kl({1.0, 0.5, 0.25}), rademacher()}) {
    const DependentGeneratorDescriptor iid{base, {1.0}};
    EXPECT_TRUE(draw_dependent(iid, 300, 87).rows() == draw_iid(base, 300, 87).rows()) << base.describe();
  }
}

TEST(DrawDependent, ConstantInnovations) {
  const SpaceDescriptor s2(2, NormKind::L2);
  const DependentGeneratorDescriptor gen{constant(Element(s2, {1.5, -2.0})), {1.0, 0.5, -0.25}};
  const auto s = draw_dependent(gen, 50, 88);
  for (int t = 0; t < 50; ++t) {
    EXPECT_DOUBLE_EQ(s.rows()(t, 0), 1.5 * 1.25);
    EXPECT_DOUBLE_EQ(s.rows()(t, 1), -2.0 * 1.25);
  }
  EXPECT_EQ(gen.order(), 2);
}

TEST(Moments, ExactAndMarginal) {
  const auto m = exact_moments(student_t(5.0));
  EXPECT_DOUBLE_EQ(m.mean[0], 0.0);
  EXPECT_DOUBLE_EQ(m.second(0, 0), 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(exact_moments(rademacher()).second(0, 0), 1.0);
  const auto kl = exact_moments(gaussian_kl({1.0, 0.25}));
  EXPECT_TRUE(kl.second.isApprox(Eigen::Vector2d(1.0, 0.25).asDiagonal().toDenseMatrix()));
  const auto fs = exact_moments(finite_support({Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 3.0)},
                                               {0.25, 0.75}));
  EXPECT_DOUBLE_EQ(fs.mean[0], 2.5);
  EXPECT_DOUBLE_EQ(fs.second(0, 0), 0.25 + 6.75);
  EXPECT_NEAR(fs.covariance()(0, 0), 0.75, 1e-15);

  const auto marg = marginal_moments({gaussian_kl({1.0}), {1.0, 1.0}});
  EXPECT_DOUBLE_EQ(marg.second(0, 0), 2.0);
  const auto shifted = marginal_moments({constant(Element(SpaceDescriptor(1, NormKind::L2), {2.0})), {1.0, 0.5}});
  EXPECT_DOUBLE_EQ(shifted.mean[0], 3.0);
  EXPECT_DOUBLE_EQ(shifted.second(0, 0), 9.0);
}

TEST(Descriptors, Validation) {
  EXPECT_THROW(student_t(2.0), InvalidConfig);
  EXPECT_THROW(gaussian_kl({}), InvalidConfig);
  EXPECT_THROW(gaussian_kl({1.0, 0.0}), InvalidConfig);
  EXPECT_THROW(gaussian_kl({0.5, 1.0}), InvalidConfig);
  EXPECT_THROW(finite_support({Eigen::VectorXd::Constant(1, 1.0)}, {0.9}), InvalidConfig);
  EXPECT_THROW(finite_support({Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(2, 1.0)}, {0.5, 0.5}),
               InvalidConfig);
  EXPECT_THROW(finite_support({}, {}), InvalidConfig);
  GeneratorDescriptor bad{Rademacher{}, SpaceDescriptor(2, NormKind::L2)};
  EXPECT_THROW(bad.validate(), InvalidConfig);
  DependentGeneratorDescriptor dep{rademacher(), {0.0, 1.0}};
  EXPECT_THROW(dep.validate(), InvalidConfig);
  dep.ma_coeffs = {};
  EXPECT_THROW(dep.validate(), InvalidConfig);
  dep.ma_coeffs = {1.0, std::nan("")};
  EXPECT_THROW(dep.validate(), InvalidConfig);
}

TEST(Descriptors, DescribeAndHashAreStable) {
  EXPECT_EQ(student_t(5.0).describe(), student_t(5.0).describe());
  EXPECT_NE(student_t(5.0).hash(), student_t(6.0).hash());
  EXPECT_NE(gaussian_kl({1.0, 0.5}).hash(), gaussian_kl({1.0, 0.5}, NormKind::L1).hash());
  const DependentGeneratorDescriptor a{rademacher(), {1.0}};
  const DependentGeneratorDescriptor b{rademacher(), {1.0, 0.5}};
  EXPECT_NE(a.hash(), b.hash());
}
