#include <gtest/gtest.h>

#include "dronerad/dbscan.hpp"
#include "dronerad/errors.hpp"
#include "oracles.hpp"

using namespace dronerad;

TEST(Dbscan, MatchesQuadraticReferenceOnSeededSets) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto set = oracle::random_point_set(seed);
    ASSERT_LE(set.points.size(), 200U);
    const auto got = dbscan(set.points, set.eps, set.min_pts);
    const auto want = oracle::dbscan_reference(set.points, set.eps, set.min_pts);
    EXPECT_EQ(got, want) << "seed " << seed << " n " << set.points.size();
  }
}

TEST(Dbscan, HandPickedClusters) {
  const std::vector<Vec3> pts{{0, 0, 0},   {0.1, 0, 0}, {0.2, 0, 0}, {5, 5, 5},
                              {5.1, 5, 5}, {5.2, 5, 5}, {9, 9, 9}};
  const auto labels = dbscan(pts, 0.15, 2);
  EXPECT_EQ(labels, (std::vector<int>{0, 0, 0, 1, 1, 1, kNoise}));
  EXPECT_EQ(cluster_sizes(labels), (std::vector<std::size_t>{3, 3}));
}

TEST(Dbscan, BorderJoinsNearestCore) {
  // Cores at x=0 (cluster 0) and x=1 (cluster 1); the border at 0.45 is nearer cluster 0's core.
  const std::vector<Vec3> pts{{0, 0, 0}, {0, 0.01, 0}, {0, -0.01, 0}, {1, 0, 0}, {1, 0.01, 0}, {1, -0.01, 0}, {0.45, 0, 0}};
  const auto labels = dbscan(pts, 0.5, 3);
  EXPECT_EQ(labels[6], 0);
  EXPECT_EQ(labels[3], 1);
}

TEST(Dbscan, OrderIndependentPartition) {
  auto set = oracle::random_point_set(1234);
  const auto a = dbscan(set.points, set.eps, set.min_pts);
  std::vector<Vec3> reversed(set.points.rbegin(), set.points.rend());
  const auto b = dbscan(reversed, set.eps, set.min_pts);
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      EXPECT_EQ(a[i] == a[j] && a[i] != kNoise, b[n - 1 - i] == b[n - 1 - j] && b[n - 1 - i] != kNoise);
    }
  }
}

TEST(Dbscan, EdgeCases) {
  EXPECT_TRUE(dbscan(std::vector<Vec3>{}, 0.1, 3).empty());
  EXPECT_EQ(dbscan(std::vector<Vec3>{{1, 2, 3}}, 0.1, 1), (std::vector<int>{0}));
  EXPECT_EQ(dbscan(std::vector<Vec3>{{1, 2, 3}}, 0.1, 2), (std::vector<int>{kNoise}));
  EXPECT_THROW(dbscan(std::vector<Vec3>{{0, 0, 0}}, 0.0, 1), ConfigError);
  EXPECT_THROW(dbscan(std::vector<Vec3>{{0, 0, 0}}, -1.0, 1), ConfigError);
}
