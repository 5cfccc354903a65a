#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "reftrack/decomp/decomposition.hpp"

using namespace reftrack;

namespace {

void expect_unit_normals(const Polyhedron& p) {
  for (const auto& n : p.normals) EXPECT_NEAR(n.norm(), 1.0, 1e-12);
}

bool inside_box(const Vec3& x, const Vec3& lo, const Vec3& hi) {
  return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

VoxelGrid pillar_grid() {
  VoxelGrid g(Vec3(0, 0, 0), 0.2, Index3(50, 30, 15));
  for (int z = 0; z < 15; ++z)
    for (int y = 0; y < 30; ++y)
      for (int x = 0; x < 50; ++x) {
        const Vec3 c = g.center(Index3(x, y, z));
        if ((c.head<2>() - Eigen::Vector2d(3.0, 2.5)).norm() < 0.5) g.set_occupied(Index3(x, y, z));
        if ((c.head<2>() - Eigen::Vector2d(6.0, 3.8)).norm() < 0.6) g.set_occupied(Index3(x, y, z));
      }
  return g;
}

}  // namespace

TEST(Decompose, EmptyObstaclesGivesBoundingBox) {
  const Vec3 a(0, 0, 0), b(1, 2, 0.5);
  const auto p = decompose_segment(a, b, {});
  ASSERT_EQ(p.rows(), 6);
  expect_unit_normals(p);
  EXPECT_LT(p.max_violation(a), 0.0);
  EXPECT_LT(p.max_violation(b), 0.0);
  EXPECT_NEAR(p.max_violation(Vec3(3.0, 4.0, 1.5)), 0.0, 1e-12);
}

TEST(Decompose, SingleObstacleSeparated) {
  const Vec3 a(0, 0, 0), b(2, 0, 0), o(1, 0.3, 0);
  const auto p = decompose_segment(a, b, {o});
  EXPECT_EQ(p.rows(), 7);
  EXPECT_TRUE(p.excludes(o));
  EXPECT_LT(p.max_violation(a), 0.0);
  EXPECT_LT(p.max_violation(b), 0.0);
}

TEST(Decompose, PointDecomposition) {
  const Vec3 a(1, 1, 1), o(1.2, 1, 1);
  const auto p = decompose_segment(a, a, {o});
  EXPECT_TRUE(p.excludes(o));
  EXPECT_LT(p.max_violation(a), 0.0);
}

TEST(Decompose, ObstacleOnSegmentIsInfeasible) {
  EXPECT_THROW(decompose_segment(Vec3(0, 0, 0), Vec3(2, 0, 0), {Vec3(1, 0, 0)}), InfeasibleSegment);
  EXPECT_THROW(decompose_segment(Vec3(0, 0, 0), Vec3(2, 0, 0), {Vec3(0, 0, 0)}), InfeasibleSegment);
}

TEST(Decompose, MarginKeepsEndpointsInside) {
  const Vec3 a(0, 0, 0), b(2, 0, 0);
  DecompOptions opts;
  opts.margin = 0.05;
  Vec3List obs = {Vec3(1, 0.4, 0), Vec3(0.5, -0.3, 0.1), Vec3(2.05, 0, 0)};
  const auto p = decompose_segment(a, b, obs, opts);
  for (const auto& o : obs) EXPECT_TRUE(p.excludes(o));
  EXPECT_LT(p.max_violation(a), 0.0);
  EXPECT_LT(p.max_violation(b), 0.0);
}

TEST(Decompose, RandomScenesBySubstitution) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const Vec3 half(2, 2, 1);
  int scenes = 0;
  while (scenes < 50) {
    const Vec3 a(u(rng), u(rng), u(rng) / 3);
    const Vec3 b = a + Vec3(u(rng), u(rng), u(rng) / 3) / 2;
    const auto [lo, hi] = segment_bbox(a, b, half);
    Vec3List obs;
    const int count = 20 + static_cast<int>(rng() % 200);
    for (int i = 0; i < count; ++i) {
      Vec3 o(std::uniform_real_distribution<double>(lo.x(), hi.x())(rng),
             std::uniform_real_distribution<double>(lo.y(), hi.y())(rng),
             std::uniform_real_distribution<double>(lo.z(), hi.z())(rng));
      obs.push_back(o);
    }
    Polyhedron p;
    try {
      p = decompose_segment(a, b, obs);
    } catch (const InfeasibleSegment&) {
      continue;
    }
    ++scenes;
    expect_unit_normals(p);
    EXPECT_LT(p.max_violation(a), 0.0);
    EXPECT_LT(p.max_violation(b), 0.0);
    for (const auto& o : obs) EXPECT_TRUE(p.excludes(o));
    // Polyhedron lies in the box: every box corner direction is bounded by the last 6 rows.
    const int r = p.rows();
    for (int k = 0; k < 3; ++k) {
      EXPECT_DOUBLE_EQ(p.offsets[r - 6 + 2 * k], hi[k]);
      EXPECT_DOUBLE_EQ(p.offsets[r - 5 + 2 * k], -lo[k]);
    }
    // Sampled interior points stay within the box.
    for (int s = 0; s < 200; ++s) {
      const Vec3 x(u(rng) * 2, u(rng) * 2, u(rng));
      if (p.contains(x)) EXPECT_TRUE(inside_box(x, lo, hi));
    }
  }
}

TEST(DecomposeParallel, SingleSegmentMatchesKernel) {
  const auto edt = compute_edt(pillar_grid());
  const Vec3 a(1.0, 2.3, 1.0), b(5.0, 2.9, 1.2);
  const auto [lo, hi] = segment_bbox(a, b, Vec3(2, 2, 1));
  const auto direct = decompose_segment(a, b, edt.occupied_in_box(lo, hi));
  const auto par = decompose_parallel({{a, b}}, edt, {}, 4);
  ASSERT_EQ(par.size(), 1u);
  ASSERT_EQ(par[0].rows(), direct.rows());
  for (int i = 0; i < direct.rows(); ++i) {
    EXPECT_EQ(par[0].normals[i], direct.normals[i]);
    EXPECT_EQ(par[0].offsets[i], direct.offsets[i]);
  }
}

TEST(DecomposeParallel, CorridorOverlapAndDeterminism) {
  const auto edt = compute_edt(pillar_grid());
  const Vec3List pts = {Vec3(0.5, 1.5, 1.0), Vec3(2.0, 1.6, 1.0), Vec3(4.0, 1.7, 1.2), Vec3(5.0, 2.6, 1.1),
                        Vec3(8.0, 2.8, 1.0)};
  std::vector<Segment> segs;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) segs.emplace_back(pts[i], pts[i + 1]);
  const auto serial = decompose_parallel(segs, edt, {}, 1);
  const auto par = decompose_parallel(segs, edt, {}, 4);
  ASSERT_EQ(serial.size(), 4u);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    std::ostringstream x, y;
    write_polyhedron_csv(x, serial[i]);
    write_polyhedron_csv(y, par[i]);
    EXPECT_EQ(x.str(), y.str());
    EXPECT_LT(serial[i].max_violation(segs[i].first), 0.0);
    EXPECT_LT(serial[i].max_violation(segs[i].second), 0.0);
    const auto [lo, hi] = segment_bbox(segs[i].first, segs[i].second, Vec3(2, 2, 1));
    for (const auto& o : edt.occupied_in_box(lo, hi)) EXPECT_TRUE(serial[i].excludes(o));
  }
  for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
    EXPECT_TRUE(serial[i].contains(pts[i + 1]));
    EXPECT_TRUE(serial[i + 1].contains(pts[i + 1]));
  }
}

TEST(DecomposeParallel, ReportsLowestFailingIndex) {
  const auto edt = compute_edt(pillar_grid());
  const Vec3 through_a(1.0, 2.5, 1.1), through_b(5.0, 2.5, 1.1);  // crosses the first pillar
  std::vector<Segment> segs = {{Vec3(0.5, 0.5, 1), Vec3(1, 0.5, 1)},
                               {through_a, through_b},
                               {Vec3(0.5, 5, 1), Vec3(1, 5, 1)},
                               {Vec3(4.0, 3.8, 1.1), Vec3(8.0, 3.8, 1.1)}};
  for (int par : {1, 3}) {
    try {
      decompose_parallel(segs, edt, {}, par);
      FAIL() << "expected InfeasibleSegment";
    } catch (const InfeasibleSegment& e) {
      EXPECT_EQ(e.segment_index(), 1);
    }
  }
  EXPECT_THROW(decompose_parallel({}, edt), InvalidArgument);
}

TEST(Polyhedron, CsvDump) {
  Polyhedron p;
  p.add(Vec3(1, 0, 0), 2.5);
  std::ostringstream os;
  write_polyhedron_csv(os, p);
  EXPECT_EQ(os.str(), "1 0 0 2.5\n");
}
