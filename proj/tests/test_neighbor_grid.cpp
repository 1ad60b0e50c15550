#include "sphflow/neighbor_grid.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace sphflow;

namespace {

using PairSet = std::set<std::pair<std::size_t, std::size_t>>;

std::vector<Vec3> random_cloud(std::mt19937_64& rng, std::size_t n, int dim, double box) {
  std::uniform_real_distribution<double> u(-box, box);
  std::vector<Vec3> pts;
  // Mix a uniform cloud with a tight cluster to stress dense cells.
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 p(u(rng), dim == 2 ? 0.0 : u(rng), u(rng));
    if (i % 4 == 0) p *= 0.05;
    pts.push_back(p);
  }
  return pts;
}

PairSet brute_force(const std::vector<Vec3>& pts, double radius) {
  PairSet out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if ((pts[i] - pts[j]).squaredNorm() < radius * radius) out.insert({i, j});
  return out;
}

}  // namespace

TEST(NeighborGrid, MatchesBruteForceOn200Configurations) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> count(2, 2000);
  std::uniform_real_distribution<double> radius(0.02, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = trial % 2 == 0 ? 2 : 3;
    const auto pts = random_cloud(rng, count(rng), dim, 1.0 + trial % 5);
    const double r = radius(rng);
    const NeighborGrid grid(pts, r, dim);
    PairSet got;
    std::size_t visits = 0;
    grid.for_each_pair(r, [&](std::size_t i, std::size_t j, const Vec3& rij, double d) {
      ASSERT_LT(i, j);
      ASSERT_NEAR((rij - (pts[i] - pts[j])).norm(), 0.0, 0.0);
      ASSERT_DOUBLE_EQ(d, rij.norm());
      got.insert({i, j});
      ++visits;
    });
    EXPECT_EQ(visits, got.size()) << "pair visited twice";
    ASSERT_EQ(got, brute_force(pts, r)) << "trial " << trial;
  }
}

TEST(NeighborGrid, SmallerRadiusThanCell) {
  std::mt19937_64 rng(5);
  const auto pts = random_cloud(rng, 800, 3, 1.0);
  const NeighborGrid grid(pts, 0.3, 3);
  PairSet got;
  grid.for_each_pair(0.1, [&](std::size_t i, std::size_t j, const Vec3&, double) { got.insert({i, j}); });
  EXPECT_EQ(got, brute_force(pts, 0.1));
}

TEST(NeighborGrid, NearQueryMatchesBruteForce) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  for (int dim : {2, 3}) {
    const auto pts = random_cloud(rng, 1500, dim, 2.0);
    const NeighborGrid grid(pts, 0.25, dim);
    for (int q = 0; q < 200; ++q) {
      const Vec3 x(u(rng), dim == 2 ? 0.0 : u(rng), u(rng));
      std::set<std::size_t> got, want;
      grid.for_each_near(x, 0.25, [&](std::size_t j, double) { got.insert(j); });
      for (std::size_t j = 0; j < pts.size(); ++j)
        if ((pts[j] - x).squaredNorm() < 0.0625) want.insert(j);
      ASSERT_EQ(got, want);
    }
  }
}

TEST(NeighborGrid, CanonicalOrderIsDeterministic) {
  std::mt19937_64 rng(1);
  const auto pts = random_cloud(rng, 1000, 2, 1.0);
  std::vector<std::pair<std::size_t, std::size_t>> a, b;
  NeighborGrid(pts, 0.1, 2).for_each_pair(0.1, [&](std::size_t i, std::size_t j, const Vec3&, double) {
    a.push_back({i, j});
  });
  NeighborGrid(pts, 0.1, 2).for_each_pair(0.1, [&](std::size_t i, std::size_t j, const Vec3&, double) {
    b.push_back({i, j});
  });
  EXPECT_EQ(a, b);
}

TEST(NeighborGrid, EveryParticleInExactlyOneCell) {
  std::mt19937_64 rng(2);
  const auto pts = random_cloud(rng, 500, 3, 1.0);
  const NeighborGrid grid(pts, 0.2, 3);
  // A zero-radius query around each particle finds only itself (or exact
  // duplicates), and finds it once.
  for (std::size_t i = 0; i < pts.size(); ++i) {
    int hits = 0;
    grid.for_each_near(pts[i], 1e-12, [&](std::size_t j, double) { hits += j == i; });
    EXPECT_EQ(hits, 1);
  }
}

TEST(NeighborGrid, EmptyAndSingle) {
  std::vector<Vec3> none;
  NeighborGrid(none, 0.1, 3).for_each_pair(0.1, [](auto...) { FAIL(); });
  std::vector<Vec3> one{{0, 0, 0}};
  NeighborGrid(one, 0.1, 3).for_each_pair(0.1, [](auto...) { FAIL(); });
}
