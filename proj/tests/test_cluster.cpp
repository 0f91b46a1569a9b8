#include "bubbleglare/cluster.hpp"

#include <algorithm>
#include <queue>
#include <random>
#include <map>
#include <numeric>

#include <gtest/gtest.h>

#include "bubbleglare/preprocess.hpp"

namespace bubbleglare {
namespace {

Grid value_grid(double vmax, double vmin) {
  Grid g = Grid::Constant(3, 4, (vmax + vmin) / 2);
  g(0, 0) = vmax;
  g(2, 3) = vmin;
  return g;
}

struct KCase {
  int vmax, vmin, k_raw;
};

TEST(SelectKTest, PinnedPairs) {
  const KCase cases[] = {{0, 0, 0},   {50, 50, 0},  {100, 0, 37}, {100, 20, 24}, {80, 30, 9},
                         {16, 0, 0},  {17, 0, 1},   {100, 84, 0}, {100, 83, 1},  {33, 0, 4},
                         {99, 1, 36}, {65, 10, 11}, {73, 21, 10}, {90, 45, 7},   {100, 34, 16},
                         {61, 60, 0}, {42, 7, 4},   {88, 62, 2},  {100, 99, 0},  {77, 0, 22}};
  const ClusterParams p;
  for (const auto& c : cases) {
    const KSelection s = select_k(value_grid(c.vmax, c.vmin), p);
    EXPECT_EQ(s.k_raw, c.k_raw) << c.vmax << " " << c.vmin;
    if (c.k_raw == 0)
      EXPECT_TRUE(s.no_glare());
    else
      EXPECT_EQ(s.k, std::clamp(c.k_raw, 2, 16));
  }
}

TEST(SelectKTest, ClampAndOverride) {
  ClusterParams p;
  EXPECT_EQ(select_k(value_grid(100, 20), p).k, 16);
  EXPECT_EQ(select_k(value_grid(80, 30), p).k, 9);
  EXPECT_EQ(select_k(value_grid(17, 0), p).k, 2);
  p.k_override = 5;
  EXPECT_EQ(select_k(value_grid(40, 40), p).k, 5);
}

TEST(FlattenTest, RowMajorOrderAndWeights) {
  Grid g(2, 2);
  g << 1, 2, 3, 4;
  const PlanarImage img = add_coordinate_channels(make_gray(g), CoordParams{});
  const std::vector<double> ones{1, 1, 1};
  const FeatureMatrix f = flatten(img, ones);
  ASSERT_EQ(f.rows(), 4);
  for (Index i = 0; i < 4; ++i) EXPECT_EQ(f(i, 0), i + 1);
  EXPECT_EQ(f(1, 1), 255);
  EXPECT_EQ(f(2, 2), 255);

  const std::vector<double> no_xy{1, 0, 0};
  const FeatureMatrix s = flatten(img, no_xy);
  EXPECT_TRUE((s.col(1).array() == 0).all() && (s.col(2).array() == 0).all());

  const std::vector<double> doubled{2, 1, 1};
  EXPECT_EQ(flatten(img, doubled).col(0), 2.0 * f.col(0));
  EXPECT_THROW(flatten(img, std::vector<double>{1}), std::invalid_argument);
}

FeatureMatrix rows(std::initializer_list<std::initializer_list<double>> data) {
  FeatureMatrix m(static_cast<Index>(data.size()), static_cast<Index>(data.begin()->size()));
  Index r = 0;
  for (const auto& row : data) {
    Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

TEST(KMeansTest, SeparableOneDimensional) {
  const FeatureMatrix x = rows({{0}, {0}, {10}, {10}});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ClusterParams p;
    p.seed = seed;
    const ClusterModel m = kmeans(x, 2, p);
    ASSERT_EQ(m.k, 2);
    std::vector<double> c{m.centroids(0, 0), m.centroids(1, 0)};
    std::sort(c.begin(), c.end());
    EXPECT_EQ(c, (std::vector<double>{0, 10}));
    EXPECT_EQ(m.objective(), 0.0);
  }
}

TEST(KMeansTest, SingleClusterIsMean) {
  const FeatureMatrix x = rows({{1, 2}, {3, 5}, {8, -1}});
  const ClusterModel m = kmeans(x, 1, ClusterParams{});
  EXPECT_NEAR(m.centroids(0, 0), 4.0, 1e-12);
  EXPECT_NEAR(m.centroids(0, 1), 2.0, 1e-12);
  EXPECT_TRUE((m.labels == 0).all());
}

TEST(KMeansTest, RejectsBadK) {
  const FeatureMatrix x = rows({{1}, {2}});
  EXPECT_THROW(kmeans(x, 3, ClusterParams{}), std::invalid_argument);
  EXPECT_THROW(kmeans(x, 0, ClusterParams{}), std::invalid_argument);
}

TEST(KMeansTest, DuplicatePointsDropEmptyClusters) {
  const FeatureMatrix x = rows({{5}, {5}, {5}, {5}, {9}});
  const ClusterModel m = kmeans(x, 4, ClusterParams{});
  EXPECT_EQ(m.k, 2);
  EXPECT_EQ(m.centroids.rows(), 2);
  EXPECT_EQ(m.objective(), 0.0);
}

double brute_force_optimum(const FeatureMatrix& x, int k) {
  const Index n = x.rows();
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    FeatureMatrix sums = FeatureMatrix::Zero(k, x.cols());
    std::vector<int> cnt(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(a[i]) += x.row(i);
      ++cnt[a[i]];
    }
    double obj = 0;
    for (Index i = 0; i < n; ++i) obj += (x.row(i) - sums.row(a[i]) / cnt[a[i]]).squaredNorm();
    best = std::min(best, obj);
    Index pos = 0;
    while (pos < n && ++a[pos] == k) a[pos++] = 0;
    if (pos == n) break;
  }
  return best;
}

TEST(KMeansTest, MatchesExhaustiveOptimumOrLocalFixedPoint) {
  std::mt19937_64 rng(17);
  int optimal = 0;
  const int trials = 60;
  for (int t = 0; t < trials; ++t) {
    const Index n = 3 + static_cast<Index>(rng() % 10);
    const Index d = 1 + static_cast<Index>(rng() % 2);
    const int k = 1 + static_cast<int>(rng() % 3);
    FeatureMatrix x(n, d);
    std::uniform_real_distribution<double> u(0, 10);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    ClusterParams p;
    p.seed = rng();
    const ClusterModel m = kmeans(x, k, p);
    const double opt = brute_force_optimum(x, k);
    EXPECT_GE(m.objective(), opt - 1e-9);
    if (m.objective() <= opt + 1e-9) ++optimal;
    // Local optimum: every point sits with its nearest centroid and each centroid is its cluster mean.
    const Eigen::VectorXi labels = m.labels.reshaped();
    for (Index i = 0; i < n; ++i) EXPECT_EQ(labels[i], nearest_centroid(x.row(i), m.centroids));
    const FeatureMatrix& means = m.per_channel_cluster_means;
    EXPECT_LE((means - m.centroids).cwiseAbs().maxCoeff(), p.tol);
  }
  EXPECT_GE(optimal, trials * 6 / 10);
}

TEST(KMeansTest, ObjectiveNonIncreasing) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 50; ++t) {
    FeatureMatrix x(200, 3);
    std::normal_distribution<double> g(0, 1);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng) + 5.0 * static_cast<double>(rng() % 4);
    ClusterParams p;
    p.seed = rng();
    const ClusterModel m = kmeans(x, 6, p);
    for (std::size_t i = 1; i < m.objective_history.size(); ++i)
      EXPECT_LE(m.objective_history[i], m.objective_history[i - 1] + 1e-9);
    EXPECT_NEAR(m.objective(), kmeans_objective(x, m.labels.reshaped(), m.centroids), 1e-6);
  }
}

TEST(KMeansTest, Deterministic) {
  std::mt19937_64 rng(3);
  FeatureMatrix x(300, 2);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<double>(rng() % 1000);
  ClusterParams p;
  p.seed = 99;
  const ClusterModel a = kmeans(x, 7, p), b = kmeans(x, 7, p);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_TRUE((a.labels == b.labels).all());
  EXPECT_EQ(a.objective_history, b.objective_history);
  p.init = KMeansInit::PlusPlus;
  const ClusterModel c = kmeans(x, 7, p), d = kmeans(x, 7, p);
  EXPECT_EQ(c.centroids, d.centroids);
}

// Canonical partition: each label replaced by the index of its first occurrence.
std::vector<int> canonical(const std::vector<int>& labels) {
  std::vector<int> out;
  std::map<int, int> ids;
  for (int l : labels) out.push_back(ids.emplace(l, static_cast<int>(ids.size())).first->second);
  return out;
}

TEST(ClusterImageTest, BlobOnDarkBackground) {
  Grid v = Grid::Constant(20, 24, 20.0);
  v.block(5, 6, 6, 7) = 90.0;
  const PlanarImage img = make_gray(v, {0, 100});
  const ClusterModel m = cluster_image(img, v, ClusterParams{});
  ASSERT_GE(m.k, 2);
  const int blob = m.labels(5, 6);
  for (Index r = 0; r < 20; ++r)
    for (Index c = 0; c < 24; ++c) EXPECT_EQ(m.labels(r, c) == blob, v(r, c) == 90.0);
  EXPECT_NEAR(m.per_channel_cluster_means(blob, 0), 90.0, 1e-9);
}

TEST(ClusterImageTest, FlatFrameIsNoGlare) {
  const Grid v = Grid::Constant(8, 8, 40.0);
  const ClusterModel m = cluster_image(make_gray(v, {0, 100}), v, ClusterParams{});
  EXPECT_TRUE(m.no_glare());
  EXPECT_EQ(m.labels.rows(), 8);
  EXPECT_TRUE((m.labels == 0).all());
}

TEST(ClusterImageTest, SpatialOnlyClustersAreContiguous) {
  std::mt19937_64 rng(4);
  Grid g(30, 40);
  for (Index i = 0; i < g.size(); ++i) g.data()[i] = static_cast<double>(rng() % 101);
  const PlanarImage img = add_coordinate_channels(make_gray(g, {0, 100}), CoordParams{});
  ClusterParams p;
  p.channel_weights = {0, 1, 1};
  p.k_override = 6;
  const ClusterModel m = cluster_image(img, g, p);
  for (int l = 0; l < m.k; ++l) {
    // Flood fill from one member must reach every member.
    Index total = (m.labels == l).count(), seen = 0;
    MaskGrid visited = MaskGrid::Constant(30, 40, false);
    std::queue<std::pair<Index, Index>> q;
    for (Index i = 0; i < m.labels.size() && q.empty(); ++i)
      if (m.labels.data()[i] == l) q.push({i / 40, i % 40});
    visited(q.front().first, q.front().second) = true;
    while (!q.empty()) {
      auto [r, c] = q.front();
      q.pop();
      ++seen;
      const Index dr[] = {1, -1, 0, 0}, dc[] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const Index rr = r + dr[k], cc = c + dc[k];
        if (rr < 0 || cc < 0 || rr >= 30 || cc >= 40 || visited(rr, cc) || m.labels(rr, cc) != l) continue;
        visited(rr, cc) = true;
        q.push({rr, cc});
      }
    }
    EXPECT_EQ(seen, total) << "cluster " << l;
  }
}

TEST(ClusterImageTest, ColorOnlyPartitionIgnoresPixelPositions) {
  std::mt19937_64 rng(8);
  const Index h = 12, w = 15;
  Grid g(h, w);
  for (Index i = 0; i < g.size(); ++i) g.data()[i] = (rng() % 2 ? 80.0 : 10.0) + static_cast<double>(rng() % 3);
  std::vector<Index> perm(static_cast<std::size_t>(g.size()));
  std::iota(perm.begin(), perm.end(), Index{0});
  ClusterParams p;
  p.k_override = 2;
  p.channel_weights = {1, 0, 0};
  auto partition = [&](const Grid& grid, const std::vector<Index>& order) {
    const PlanarImage img = add_coordinate_channels(make_gray(grid, {0, 100}), CoordParams{});
    const ClusterModel m = cluster_image(img, grid, p);
    std::vector<int> labels;
    for (Index i : order) labels.push_back(m.labels.data()[i]);
    return canonical(labels);
  };
  const auto base = partition(g, perm);
  for (int t = 0; t < 5; ++t) {
    std::vector<Index> shuffled = perm;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    Grid moved(h, w);
    for (Index i = 0; i < g.size(); ++i) moved.data()[shuffled[i]] = g.data()[i];
    // Read the moved image back in original pixel order.
    EXPECT_EQ(partition(moved, shuffled), base);
  }
}

TEST(ClusterImageTest, LabelsAreNearestCentroids) {
  std::mt19937_64 rng(12);
  Grid g(16, 16);
  for (Index i = 0; i < g.size(); ++i) g.data()[i] = static_cast<double>(rng() % 101);
  const PlanarImage img = add_coordinate_channels(make_gray(g, {0, 100}), CoordParams{});
  ClusterParams p;
  const ClusterModel m = cluster_image(img, g, p);
  const FeatureMatrix f = flatten(img, std::vector<double>{1, 1, 1});
  for (Index i = 0; i < f.rows(); ++i) EXPECT_EQ(m.labels.data()[i], nearest_centroid(f.row(i), m.centroids));
}

}  // namespace
}  // namespace bubbleglare
