#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "saso/clustering.hpp"
#include "saso/error.hpp"

namespace saso::clustering {
namespace {

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

TEST(MeanShift, IdenticalPointsFormOneCluster) {
  Matrix e = Matrix::Constant(10, 5, 0.3);
  auto r = mean_shift(e, MeanShiftConfig{});
  EXPECT_EQ(r.num_clusters, 1);
  for (int a : r.assignments) EXPECT_EQ(a, 0);
}

TEST(MeanShift, OneDimensionalHandExample) {
  auto r = mean_shift(col({0.0, 0.1, 0.2, 5.0, 5.1}), MeanShiftConfig{});
  ASSERT_EQ(r.num_clusters, 2);
  EXPECT_EQ(r.assignments[0], r.assignments[1]);
  EXPECT_EQ(r.assignments[1], r.assignments[2]);
  EXPECT_EQ(r.assignments[3], r.assignments[4]);
  EXPECT_NE(r.assignments[0], r.assignments[3]);
  EXPECT_NEAR(r.modes(r.assignments[0], 0), 0.1, 1e-12);
  EXPECT_NEAR(r.modes(r.assignments[3], 0), 5.05, 1e-12);
}

TEST(MeanShift, SeparatedGroups) {
  std::mt19937_64 rng(2);
  auto m = oracle::gaussian_mixture(2, 5, 40, 10.0, 0.05, rng);
  auto r = mean_shift(m.points, MeanShiftConfig{});
  EXPECT_EQ(r.num_clusters, 2);
  EXPECT_EQ(oracle::partition_agreement(r.assignments, m.labels), 1.0);
}

TEST(MeanShift, MixturesRecoverClusterCount) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 2 + trial % 5;
    auto m = oracle::gaussian_mixture(k, 5, 30, 4 * 0.6 + 0.1, 0.6 / 4, rng);
    auto r = mean_shift(m.points, MeanShiftConfig{}, static_cast<std::uint64_t>(trial));
    EXPECT_EQ(r.num_clusters, k);
    EXPECT_EQ(oracle::partition_agreement(r.assignments, m.labels), 1.0);
  }
}

TEST(MeanShift, DenseIdsAndModesNearData) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(0, 1);
  Matrix e(80, 3);
  for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = d(rng);
  MeanShiftConfig cfg;
  cfg.max_seeds = 30;
  auto r = mean_shift(e, cfg, 4);
  std::set<int> ids(r.assignments.begin(), r.assignments.end());
  EXPECT_EQ(static_cast<int>(ids.size()), r.num_clusters);
  EXPECT_EQ(*ids.begin(), 0);
  EXPECT_EQ(*ids.rbegin(), r.num_clusters - 1);
  for (Eigen::Index k = 0; k < r.modes.rows(); ++k) {
    const double nearest = (e.rowwise() - r.modes.row(k)).rowwise().norm().minCoeff();
    EXPECT_LE(nearest, cfg.bandwidth);
  }
  auto again = mean_shift(e, cfg, 4);
  EXPECT_EQ(again.assignments, r.assignments);
}

TEST(MeanShift, PermutationEquivariance) {
  std::mt19937_64 rng(5);
  auto m = oracle::gaussian_mixture(4, 5, 25, 3.0, 0.1, rng);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(m.points.rows()));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix p(m.points.rows(), m.points.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) p.row(static_cast<Eigen::Index>(i)) = m.points.row(perm[i]);
  auto a = mean_shift(m.points, MeanShiftConfig{});
  auto b = mean_shift(p, MeanShiftConfig{});
  std::vector<int> a_perm(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) a_perm[i] = a.assignments[static_cast<std::size_t>(perm[i])];
  EXPECT_EQ(oracle::partition_agreement(a_perm, b.assignments), 1.0);
}

TEST(MeanShift, Errors) {
  EXPECT_THROW(mean_shift(Matrix(0, 5), MeanShiftConfig{}), Error);
  MeanShiftConfig bad;
  bad.bandwidth = 0;
  EXPECT_THROW(mean_shift(Matrix::Zero(2, 2), bad), Error);
}

TEST(ClusterIdentity, MajorityAndTies) {
  std::vector<int> a = {0, 0, 0}, g = {7, 7, 3};
  EXPECT_EQ(resolve_cluster_identity(a, g), std::vector<int>{7});
  std::vector<int> a2 = {0, 0, 0, 0}, g2 = {3, 3, 7, 7};
  EXPECT_EQ(resolve_cluster_identity(a2, g2), std::vector<int>{3});
  std::vector<int> a3 = {0, 2}, g3 = {1, 4};
  EXPECT_EQ(resolve_cluster_identity(a3, g3), (std::vector<int>{1, -1, 4}));
}

TEST(WrongPoints, SplitsEachCluster) {
  std::vector<int> a = {0, 0, 0}, g = {7, 7, 3};
  auto id = resolve_cluster_identity(a, g);
  auto w = wrong_points(a, id, g);
  EXPECT_EQ(w[0].wrong, std::vector<std::size_t>{2});
  EXPECT_EQ(w[0].correct, (std::vector<std::size_t>{0, 1}));
}

TEST(WrongPoints, RandomPartitionProperty) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> cl(0, 4), gi(0, 6);
  for (int t = 0; t < 50; ++t) {
    std::vector<int> a(60), g(60);
    for (auto& v : a) v = cl(rng);
    for (auto& v : g) v = gi(rng);
    auto id = resolve_cluster_identity(a, g);
    auto split = wrong_points(a, id, g);
    std::vector<int> seen(a.size(), 0);
    for (std::size_t c = 0; c < split.size(); ++c) {
      for (auto i : split[c].wrong) {
        EXPECT_EQ(a[i], static_cast<int>(c));
        EXPECT_NE(g[i], id[c]);
        ++seen[i];
      }
      for (auto i : split[c].correct) {
        EXPECT_EQ(a[i], static_cast<int>(c));
        EXPECT_EQ(g[i], id[c]);
        ++seen[i];
      }
    }
    for (int s : seen) EXPECT_EQ(s, 1);
  }
}

TEST(ClusterSemantics, MajorityVote) {
  std::vector<int> a = {0, 0, 0}, s = {2, 2, 5};
  EXPECT_EQ(assign_cluster_semantics(a, s), std::vector<int>{2});
  std::vector<int> u = {4, 4, 4};
  EXPECT_EQ(assign_cluster_semantics(a, u), std::vector<int>{4});

  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> cl(0, 3), sem(0, 5);
  std::vector<int> ra(100), rs(100);
  for (auto& v : ra) v = cl(rng);
  for (auto& v : rs) v = sem(rng);
  auto got = assign_cluster_semantics(ra, rs);
  for (int c = 0; c < 4; ++c) {
    std::vector<int> hist(6, 0);
    for (std::size_t i = 0; i < ra.size(); ++i)
      if (ra[i] == c) ++hist[static_cast<std::size_t>(rs[i])];
    const int expect = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
    EXPECT_EQ(got[static_cast<std::size_t>(c)], expect);
  }
  EXPECT_EQ(mode_of(std::vector<int>{9, 1, 9, 1}), 1);
  EXPECT_THROW(mode_of(std::vector<int>{}), Error);
}

}  // namespace
}  // namespace saso::clustering
