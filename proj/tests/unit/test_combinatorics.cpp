#include "ucov/combinatorics.hpp"
#include "ucov/errors.hpp"
#include "ucov/moments.hpp"
#include "ucov/parallel.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <numeric>
#include <set>
#include <stdexcept>

using namespace ucov;

TEST(Binomial, SmallValuesMatchPascal) {
  std::vector<std::vector<std::uint64_t>> pascal(40);
  for (int n = 0; n < 40; ++n) {
    pascal[n].assign(n + 1, 1);
    for (int k = 1; k < n; ++k) pascal[n][k] = pascal[n - 1][k - 1] + pascal[n - 1][k];
    for (int k = 0; k <= n; ++k) EXPECT_EQ(binomial(n, k), pascal[n][k]) << n << " " << k;
  }
  EXPECT_EQ(binomial(5, -1), 0u);
  EXPECT_EQ(binomial(5, 6), 0u);
  EXPECT_EQ(binomial(66, 33), 7219428434016265740ULL);
  EXPECT_THROW(binomial(70, 35), InvalidConfig);
}

TEST(Subsets, LexicographicAndComplete) {
  for (int n = 0; n <= 9; ++n) {
    for (int k = 0; k <= n; ++k) {
      std::vector<std::vector<int>> seen;
      for_each_k_subset(n, k, [&](std::span<const int> s) { seen.emplace_back(s.begin(), s.end()); });
      ASSERT_EQ(seen.size(), binomial(n, k)) << n << " " << k;
      EXPECT_TRUE(std::is_sorted(seen.begin(), seen.end()));
      EXPECT_EQ(std::set<std::vector<int>>(seen.begin(), seen.end()).size(), seen.size());
      for (std::size_t r = 0; r < seen.size(); ++r) {
        EXPECT_TRUE(std::is_sorted(seen[r].begin(), seen[r].end()));
        EXPECT_EQ(unrank_k_subset(n, k, r), seen[r]) << n << " " << k << " rank " << r;
      }
      EXPECT_THROW(unrank_k_subset(n, k, seen.size()), InvalidOrder);
    }
  }
  int calls = 0;
  for_each_k_subset(3, 4, [&](std::span<const int>) { ++calls; });
  EXPECT_EQ(calls, 0);
}

TEST(Parallel, ForEachIndexCoversEveryIndexOnce) {
  std::vector<int> hits(10007, 0);
  par::for_each_index(static_cast<std::int64_t>(hits.size()), [&](std::int64_t i) { ++hits[i]; });
  EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}

TEST(Parallel, ExceptionsPropagate) {
  EXPECT_THROW(par::for_each_index(100, [](std::int64_t i) {
    if (i == 57) throw std::runtime_error("boom");
  }), std::runtime_error);
}

TEST(Parallel, ChunkedReduceIndependentOfWorkers) {
  Rng rng(21);
  std::vector<double> xs(50000);
  for (auto& x : xs) x = rng.normal() * 1e3 + 7.0;
  auto run = [&](par::Exec exec) {
    return par::chunked_reduce<ScalarMoments>(
        static_cast<std::int64_t>(xs.size()), 333, [] { return ScalarMoments{}; },
        [&](ScalarMoments& acc, std::int64_t b, std::int64_t e, std::int64_t) {
          for (std::int64_t i = b; i < e; ++i) acc.add(xs[i]);
        },
        exec);
  };
  const int saved = par::workers();
  const auto serial = run(par::Exec::Serial);
  for (int w : {1, 2, 3, 8}) {
    par::set_workers(w);
    const auto p = run(par::Exec::Parallel);
    EXPECT_EQ(p.count, serial.count);
    EXPECT_EQ(p.mean, serial.mean) << "workers " << w;
    EXPECT_EQ(p.m2, serial.m2) << "workers " << w;
  }
  par::set_workers(saved);
}

TEST(Moments, WelfordMatchesTwoPassAndMergeIsConsistent) {
  Rng rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = support::uniform_int(rng, 2, 300);
    std::vector<double> xs(n);
    for (auto& x : xs) x = rng.normal() * 5.0 + 100.0;
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);

    const int cut = support::uniform_int(rng, 0, n);
    ScalarMoments a, b, all;
    for (int i = 0; i < n; ++i) {
      (i < cut ? a : b).add(xs[i]);
      all.add(xs[i]);
    }
    a.merge(b);
    EXPECT_NEAR(all.mean, mean, 1e-10 * std::abs(mean));
    EXPECT_NEAR(all.variance(), ss / (n - 1), 1e-9 * ss / (n - 1));
    EXPECT_NEAR(a.mean, all.mean, 1e-10 * std::abs(mean));
    EXPECT_NEAR(a.variance(), all.variance(), 1e-9 * all.variance());
    EXPECT_EQ(a.count, n);
  }
}

TEST(Moments, MatrixEntrywise) {
  Rng rng(23);
  MatrixMoments mm(2, 3);
  ScalarMoments corner;
  for (int i = 0; i < 100; ++i) {
    const Eigen::MatrixXd g = support::random_grid(rng, 2, 3);
    mm.add(g);
    corner.add(g(1, 2));
  }
  EXPECT_NEAR(mm.mean(1, 2), corner.mean, 1e-14);
  EXPECT_NEAR(mm.variance()(1, 2), corner.variance(), 1e-12);
  EXPECT_NEAR(mm.se()(1, 2), corner.se(), 1e-12);
  EXPECT_EQ(ScalarMoments{}.variance(), 0.0);
}
