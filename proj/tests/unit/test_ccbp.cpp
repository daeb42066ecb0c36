#include <gtest/gtest.h>

#include "helpers.hpp"
#include "qrect/ccbp.hpp"
#include "qrect/generators.hpp"

using namespace qrect;
using qtest::Vec2;
using qtest::Vec3;

namespace {

struct Corpus {
  Generated g;
  SpatialIndex index;
  Ccbp c;
};

Corpus graph_corpus(double amplitude, int count, int depth, double region_factor, double r0) {
  GeneratorSpec s;
  s.kind = GeneratorKind::LipschitzGraph;
  s.amplitude = amplitude;
  s.count = count;
  Corpus out{generate(s), {}, {}};
  out.index = make_index(out.g.cloud);
  CcbpConfig cfg;
  cfg.anchor = Vec3(0, 0, 0);
  cfg.unit = r0 * 1e5;
  cfg.depth = depth;
  cfg.region_factor = region_factor;
  out.c = build_ccbp(out.g.cloud, out.index, out.g.tangents, cfg);
  return out;
}

AffinePlane xy_plane(const Vec& base) {
  Mat f(3, 2);
  f << 1, 0, 0, 1, 0, 0;
  return AffinePlane(base, f);
}

AffinePlane tilted_plane(const Vec& base, double phi) {
  Mat f(3, 2);
  f << std::cos(phi), 0, 0, 1, std::sin(phi), 0;
  return AffinePlane(base, f);
}

// Two levels, r_0 = 1, r_1 = 0.1: level 0 holds two nodes, the second with a plane tilted by phi;
// level 1 holds one node near the origin on the xy-plane.
Ccbp handmade(double phi) {
  Ccbp c;
  c.unit = 1e5;
  c.anchor = Vec::Zero(3);
  c.region_radius = 10.0;
  CcbpLevel l0;
  l0.k = 0;
  l0.radius = 1.0;
  l0.nodes.resize(3, 2);
  l0.nodes.col(0) = Vec3(0, 0, 0);
  l0.nodes.col(1) = Vec3(1.5, 0, 0);
  l0.planes = {xy_plane(l0.nodes.col(0)), tilted_plane(l0.nodes.col(1), phi)};
  l0.node_index = {0, 1};
  l0.raw = l0.nodes;
  l0.raw_index = l0.node_index;
  CcbpLevel l1;
  l1.k = 1;
  l1.radius = 0.1;
  l1.nodes = Vec3(0.05, 0, 0);
  l1.planes = {xy_plane(l1.nodes.col(0))};
  l1.node_index = {2};
  l1.raw = l1.nodes;
  l1.raw_index = l1.node_index;
  c.levels = {l0, l1};
  c.sigma0 = l0.planes[0];
  c.sigma0_node = 0;
  return c;
}

}  // namespace

TEST(BuildNet, SinglePoint) {
  const WeightedCloud c = WeightedCloud::uniform(1, Mat::Zero(2, 1));
  const SpatialIndex idx(c, 1.0);
  EXPECT_EQ(build_net(c, idx, Vec::Zero(2), 1.0, 0.1, nullptr), std::vector<int>{0});
}

TEST(BuildNet, UnitSegmentCountAndCoverage) {
  const int m = 2001;
  Mat pts = Mat::Zero(2, m);
  for (int i = 0; i < m; ++i) pts(0, i) = static_cast<double>(i) / (m - 1);
  const WeightedCloud c = WeightedCloud::uniform(1, pts);
  const SpatialIndex idx(c, 0.01);
  for (double r : {0.01, 0.03, 0.07}) {
    const auto net = build_net(c, idx, Vec2(0.5, 0.0), 0.5, r, nullptr);
    const double sep = 4.0 * r / 3.0;
    EXPECT_GE(static_cast<double>(net.size()), 1.0 / sep);
    EXPECT_LE(static_cast<double>(net.size()), 1.0 / sep + 2.0);
    for (size_t a = 0; a < net.size(); ++a)
      for (size_t b = a + 1; b < net.size(); ++b) EXPECT_GE((c.point(net[a]) - c.point(net[b])).norm(), sep);
    for (int i = 0; i < m; ++i) {
      double best = 1e9;
      for (int j : net) best = std::min(best, (c.point(i) - c.point(j)).norm());
      ASSERT_LE(best, sep);
    }
  }
}

TEST(BuildNet, EmptyDescentRegion) {
  Mat pts(2, 2);
  pts << 0, 5, 0, 0;
  const WeightedCloud c = WeightedCloud::uniform(1, pts);
  const SpatialIndex idx(c, 1.0);
  CcbpLevel prev;
  prev.radius = 0.1;
  prev.nodes = qtest::Vec2(5, 0);
  try {
    build_net(c, idx, Vec::Zero(2), 1.0, 0.01, &prev);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyRegion);
  }
}

TEST(Ccbp, StructuralInvariantsOnGraphCorpus) {
  const Corpus k = graph_corpus(0.03, 20000, 2, 1.5, 0.3);
  ASSERT_GE(k.c.levels.size(), 2u);
  for (size_t li = 0; li < k.c.levels.size(); ++li) {
    const CcbpLevel& lv = k.c.levels[li];
    EXPECT_EQ(lv.radius, k.c.radius(static_cast<int>(li)));
    for (Eigen::Index i = 0; i < lv.size(); ++i) {
      EXPECT_LE((lv.nodes.col(i) - lv.raw.col(i)).norm(), lv.radius / 6.0);
      EXPECT_LE(lv.planes[static_cast<size_t>(i)].distance(lv.nodes.col(i)), 1e-12);
      for (Eigen::Index j = i + 1; j < lv.size(); ++j) {
        EXPECT_GE((lv.nodes.col(i) - lv.nodes.col(j)).norm(), lv.radius);
        EXPECT_GE((lv.raw.col(i) - lv.raw.col(j)).norm(), 4.0 * lv.radius / 3.0);
      }
      if (li > 0) {
        const CcbpLevel& up = k.c.levels[li - 1];
        const double reach = (up.nodes.colwise() - Vec(lv.nodes.col(i))).colwise().norm().minCoeff();
        EXPECT_LT(reach, 2.0 * up.radius);
      }
    }
    // coverage of the working region (restricted to the descent set below level 0)
    for (int q : k.index.ball(k.c.anchor, k.c.region_radius)) {
      if (li > 0) {
        const CcbpLevel& up = k.c.levels[li - 1];
        const double reach = (up.nodes.colwise() - Vec(k.g.cloud.point(q))).colwise().norm().minCoeff();
        if (reach >= 2.0 * up.radius - lv.radius / 6.0) continue;
      }
      const double cover = (lv.raw.colwise() - Vec(k.g.cloud.point(q))).colwise().norm().minCoeff();
      ASSERT_LE(cover, 4.0 * lv.radius / 3.0);
    }
  }
  Eigen::Index nearest = 0;
  (k.c.levels[0].nodes.colwise() - k.c.anchor).colwise().squaredNorm().minCoeff(&nearest);
  EXPECT_EQ(k.c.sigma0_node, nearest);
  EXPECT_EQ(k.c.sigma0.base(), Vec(k.c.levels[0].nodes.col(nearest)));
  const CompatReport rep = validate_ccbp(k.c);
  double e0 = 0.0;
  for (Eigen::Index j = 0; j < k.c.levels[0].size(); ++j) e0 = std::max(e0, k.c.sigma0.distance(k.c.levels[0].nodes.col(j)));
  EXPECT_DOUBLE_EQ(rep.eps_initial, e0 / k.c.unit);
}

TEST(Ccbp, NetsAreDeterministic) {
  const Corpus a = graph_corpus(0.02, 8000, 1, 2.0, 0.3);
  const Corpus b = graph_corpus(0.02, 8000, 1, 2.0, 0.3);
  ASSERT_EQ(a.c.levels.size(), b.c.levels.size());
  for (size_t i = 0; i < a.c.levels.size(); ++i) {
    EXPECT_EQ(a.c.levels[i].raw_index, b.c.levels[i].raw_index);
    EXPECT_EQ(a.c.levels[i].node_index, b.c.levels[i].node_index);
    EXPECT_EQ(a.c.levels[i].nodes, b.c.levels[i].nodes);
  }
}

TEST(Ccbp, LevelsBelowResolutionAreDropped) {
  const Corpus k = graph_corpus(0.02, 2000, 6, 2.0, 0.3);
  EXPECT_LT(k.c.levels.size(), 7u);
  EXPECT_FALSE(k.c.warnings.empty());
  for (const auto& lv : k.c.levels) EXPECT_GE(lv.radius, config::ccbp_spacing_factor * k.c.spacing);
}

TEST(SnapAndAssign, FlatCloudKeepsRawCenterAndPlane) {
  GeneratorSpec s;
  s.count = 3000;
  const auto g = generate(s);
  const SpatialIndex idx = make_index(g.cloud);
  Mat raw(3, 3);
  raw << g.cloud.point(5), g.cloud.point(700), g.cloud.point(2000);
  const SnapResult snap = snap_and_assign(g.cloud, idx, g.tangents, raw, 0.05, 1.0, 4.0);
  EXPECT_EQ(snap.node_index, (std::vector<int>{5, 700, 2000}));
  for (const auto& p : snap.planes) EXPECT_LE(frobenius_distance(projection_matrix(p).matrix(), projection_matrix(xy_plane(Vec::Zero(3))).matrix()), 1e-12);
}

TEST(SnapAndAssign, EmptySnapBall) {
  GeneratorSpec s;
  s.count = 500;
  const auto g = generate(s);
  const SpatialIndex idx = make_index(g.cloud);
  const Mat raw = Vec3(0.0, 0.0, 0.5);
  try {
    snap_and_assign(g.cloud, idx, g.tangents, raw, 0.06, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SnapFailed);
  }
}

TEST(ValidateCcbp, FlatCloudHasNoIncompatibility) {
  GeneratorSpec s;
  s.count = 20000;
  const auto g = generate(s);
  const SpatialIndex idx = make_index(g.cloud);
  CcbpConfig cfg;
  cfg.anchor = Vec::Zero(3);
  cfg.unit = 0.3e5;
  cfg.region_factor = 2.0;
  cfg.depth = 1;
  const Ccbp c = build_ccbp(g.cloud, idx, g.tangents, cfg);
  const CompatReport r = validate_ccbp(c);
  EXPECT_LE(r.eps_initial, 1e-8);
  EXPECT_LE(r.eps_sigma0, 1e-8);
  EXPECT_LE(r.eps_same_level, 1e-8);
  EXPECT_LE(r.eps_cross_level, 1e-8);
  EXPECT_GT(r.same_pairs, 0);
  EXPECT_GT(r.cross_pairs, 0);
  const Vec y = Vec3(0.1, 0.05, 0);
  for (int k = 0; k < 2; ++k) EXPECT_EQ(epsilon_prime(c, k, y), 0.0);
}

TEST(ValidateCcbp, TiltedHandmadePlane) {
  for (double phi : {0.01, 0.05, 0.2}) {
    const Ccbp c = handmade(phi);
    const CompatReport r = validate_ccbp(c);
    const CcbpLevel& l0 = c.levels[0];
    const double oracle = std::max(plane_distance_local(l0.planes[0], l0.planes[1], l0.nodes.col(0), 100.0),
                                   plane_distance_local(l0.planes[1], l0.planes[0], l0.nodes.col(1), 100.0));
    EXPECT_DOUBLE_EQ(r.eps_same_level, oracle);
    EXPECT_NEAR(r.eps_same_level, std::sin(phi), 0.02 * std::sin(phi));
    EXPECT_EQ(r.same_pairs, 2);
    const CcbpLevel& l1 = c.levels[1];
    EXPECT_EQ(r.cross_pairs, 2);
    EXPECT_DOUBLE_EQ(r.eps_cross_level, plane_distance_local(l0.planes[1], l1.planes[0], l0.nodes.col(1), 20.0));
  }
}

TEST(EpsilonPrime, TiltedHandmadeAgainstPairEnumeration) {
  const double phi = 0.1;
  const Ccbp c = handmade(phi);
  const Vec y = Vec3(0.3, 0.0, 0.0);  // inside 10 B_{0,1} and within 11 r_0 of both level-0 nodes
  const CcbpLevel& l0 = c.levels[0];
  const CcbpLevel& l1 = c.levels[1];
  double oracle = 0.0;
  for (int i = 0; i < 2; ++i) oracle = std::max(oracle, plane_distance_local(l1.planes[0], l0.planes[static_cast<size_t>(i)], l0.nodes.col(i), 100.0));
  EXPECT_DOUBLE_EQ(epsilon_prime(c, 1, y), oracle);
  EXPECT_NEAR(epsilon_prime(c, 1, y), std::sin(phi), 0.02 * std::sin(phi));
  EXPECT_EQ(epsilon_prime(c, 1, Vec3(2.0, 0, 0)), 0.0);   // outside V_1^10
  EXPECT_EQ(epsilon_prime(c, 3, y), 0.0);                 // no such level
}

TEST(EpsilonPrime, ShrinkingThePairSetNeverIncreasesIt) {
  std::mt19937_64 rng(21);
  const Ccbp full = handmade(0.15);
  Ccbp reduced = full;
  reduced.levels[0].nodes = full.levels[0].nodes.leftCols(1);
  reduced.levels[0].planes.resize(1);
  for (int t = 0; t < 200; ++t) {
    const Vec y = qtest::random_vec(3, rng, 2.0);
    for (int k = 0; k < 2; ++k) EXPECT_LE(epsilon_prime(reduced, k, y), epsilon_prime(full, k, y));
  }
}
