#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "saso/error.hpp"
#include "saso/merge.hpp"

namespace saso::merge {
namespace {

// Two 0.4 m cubes of points on a 2 cm lattice, far apart along x.
std::vector<Vec3> two_cubes(std::vector<int>& gt) {
  std::vector<Vec3> pts;
  for (int obj = 0; obj < 2; ++obj) {
    const double ox = obj == 0 ? 0.1 : 1.3;
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j)
        for (int k = 0; k < 5; ++k) {
          pts.emplace_back(ox + 0.02 * i, 0.1 + 0.02 * j, 0.02 * k);
          gt.push_back(obj);
        }
  }
  return pts;
}

BlockInstances block_from(const std::vector<Vec3>& pts, const std::vector<int>& ids, double x_lo,
                          double x_hi, int offset) {
  BlockInstances b;
  b.x0 = x_lo;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].x() >= x_lo && pts[i].x() < x_hi) {
      b.point_indices.push_back(i);
      b.local_ids.push_back(ids[i] + offset);
    }
  }
  return b;
}

TEST(Merge, DensifyByFirstOccurrence) {
  const std::vector<int> in = {7, 7, -1, 3, 7, 3};
  EXPECT_EQ(densify(in), (std::vector<int>{0, 0, 1, 2, 0, 2}));
}

TEST(Merge, SingleBlockKeepsPartition) {
  std::vector<int> gt;
  const auto pts = two_cubes(gt);
  const std::vector<BlockInstances> blocks = {block_from(pts, gt, -10, 10, 40)};
  const auto out = merge_blocks(pts, blocks, {});
  EXPECT_EQ(out, densify(gt));
}

TEST(Merge, ObjectSplitAcrossOverlappingBlocksIsJoined) {
  std::vector<int> gt;
  const auto pts = two_cubes(gt);
  // Blocks overlap on [0.2, 0.4), inside the first cube; local ids differ.
  const std::vector<BlockInstances> blocks = {block_from(pts, gt, -10, 0.4, 0),
                                              block_from(pts, gt, 0.2, 10, 100)};
  const auto out = merge_blocks(pts, blocks, {});
  EXPECT_EQ(oracle::partition_agreement(out, gt), 1.0);
  EXPECT_EQ(std::set<int>(out.begin(), out.end()).size(), 2u);
}

TEST(Merge, DistantObjectsStaySeparate) {
  std::vector<int> gt;
  const auto pts = two_cubes(gt);
  // Every point labeled 0 locally, but each block sees one cube only.
  const std::vector<int> zeros(pts.size(), 0);
  const std::vector<BlockInstances> blocks = {block_from(pts, zeros, -10, 1.0, 0),
                                              block_from(pts, zeros, 1.0, 10, 0)};
  const auto out = merge_blocks(pts, blocks, {});
  EXPECT_EQ(oracle::partition_agreement(out, gt), 1.0);
}

TEST(Merge, Idempotent) {
  std::vector<int> gt;
  const auto pts = two_cubes(gt);
  const std::vector<BlockInstances> blocks = {block_from(pts, gt, -10, 0.4, 0),
                                              block_from(pts, gt, 0.2, 10, 100)};
  const auto once = merge_blocks(pts, blocks, {});
  const std::vector<BlockInstances> again = {block_from(pts, once, -10, 10, 0)};
  EXPECT_EQ(merge_blocks(pts, again, {}), once);
}

TEST(Merge, BlockOrderDoesNotMatter) {
  std::vector<int> gt;
  const auto pts = two_cubes(gt);
  const std::vector<BlockInstances> a = {block_from(pts, gt, -10, 0.4, 0),
                                         block_from(pts, gt, 0.2, 10, 100)};
  const std::vector<BlockInstances> b = {a[1], a[0]};
  EXPECT_EQ(merge_blocks(pts, a, {}), merge_blocks(pts, b, {}));
}

TEST(Merge, UnlabeledPointsTakeNearestLabel) {
  std::vector<int> gt;
  const auto pts = two_cubes(gt);
  // Only every other point is seen by a block.
  BlockInstances b;
  for (std::size_t i = 0; i < pts.size(); i += 7) {
    b.point_indices.push_back(i);
    b.local_ids.push_back(gt[i]);
  }
  const std::vector<BlockInstances> blocks = {b};
  MergeConfig cfg;
  cfg.voxel_size = 0.01;
  const auto out = merge_blocks(pts, blocks, cfg);
  EXPECT_EQ(oracle::partition_agreement(out, gt), 1.0);
}

TEST(Merge, PerfectBlockClusteringRecoversGroundTruth) {
  std::mt19937_64 rng(3);
  std::vector<Vec3> pts;
  std::vector<int> gt;
  // Ten separated boxes scattered over a 4 m x 4 m room.
  for (int obj = 0; obj < 10; ++obj) {
    const double cx = 0.3 + 0.8 * (obj % 5), cy = 0.5 + 2.0 * (obj / 5);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (int i = 0; i < 300; ++i) {
      pts.emplace_back(cx + u(rng), cy + u(rng), 0.2 + u(rng));
      gt.push_back(obj);
    }
  }
  std::vector<BlockInstances> blocks;
  for (double x0 = 0; x0 < 4; x0 += 0.5)
    for (double y0 = 0; y0 < 4; y0 += 0.5) {
      BlockInstances b;
      b.x0 = x0;
      b.y0 = y0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].x() >= x0 && pts[i].x() < x0 + 1 && pts[i].y() >= y0 && pts[i].y() < y0 + 1) {
          b.point_indices.push_back(i);
          b.local_ids.push_back(gt[i] * 3 + static_cast<int>(x0 * 2) % 3);
        }
      }
      if (!b.point_indices.empty()) blocks.push_back(b);
    }
  const auto out = merge_blocks(pts, blocks, {});
  EXPECT_EQ(oracle::partition_agreement(out, gt), 1.0);
}

// A 1 m floor on a 2 cm lattice with a thin pad lying on it.
struct PadScene {
  std::vector<Vec3> pts;
  std::vector<int> gt, sem;
};

PadScene pad_on_floor() {
  PadScene s;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) {
      s.pts.emplace_back(0.02 * i, 0.02 * j, 0.0);
      s.gt.push_back(0);
      s.sem.push_back(0);
      const double x = 0.02 * i, y = 0.02 * j;
      if (x >= 0.6 && x < 0.9 && y >= 0.3 && y < 0.6) {
        s.pts.emplace_back(x, y, 0.02);
        s.gt.push_back(1);
        s.sem.push_back(1);
      }
    }
  return s;
}

TEST(Merge, ClassGatingKeepsTouchingObjectsApart) {
  const auto s = pad_on_floor();
  // The first block sees floor only; the second sees the floor and the pad.
  BlockInstances a;
  for (std::size_t i = 0; i < s.pts.size(); ++i) {
    if (s.gt[i] != 0) continue;
    a.point_indices.push_back(i);
    a.local_ids.push_back(0);
  }
  BlockInstances b = block_from(s.pts, s.gt, -10, 10, 10);
  b.x0 = 1;
  const std::vector<BlockInstances> blocks = {a, b};
  EXPECT_EQ(oracle::partition_agreement(merge_blocks(s.pts, blocks, {}, s.sem), s.gt), 1.0);
  // Without classes the pad's voxels are all floor voxels, so it is absorbed.
  const auto blind = merge_blocks(s.pts, blocks, {});
  EXPECT_EQ(std::set<int>(blind.begin(), blind.end()).size(), 1u);
}

TEST(Merge, SmallUnanchoredFragmentsJoinTheirNeighbors) {
  std::vector<int> gt;
  const auto pts = two_cubes(gt);
  // A first block holds three stray points of the first cube.
  BlockInstances stray;
  stray.point_indices = {0, 1, 2};
  stray.local_ids = {0, 0, 0};
  BlockInstances rest = block_from(pts, gt, -10, 10, 0);
  rest.x0 = 1;
  rest.point_indices.erase(rest.point_indices.begin(), rest.point_indices.begin() + 3);
  rest.local_ids.erase(rest.local_ids.begin(), rest.local_ids.begin() + 3);
  const std::vector<BlockInstances> blocks = {stray, rest};
  EXPECT_EQ(oracle::partition_agreement(merge_blocks(pts, blocks, {}), gt), 1.0);
  MergeConfig keep;
  keep.min_fragment_points = 0;
  const auto split = merge_blocks(pts, blocks, keep);
  EXPECT_EQ(std::set<int>(split.begin(), split.end()).size(), 3u);
}

TEST(Merge, IdsMintedInDisjointBlocksAreUnified) {
  std::vector<int> gt;
  const auto pts = two_cubes(gt);
  // The first cube spans x in [0.1, 0.48]. Two blocks see its ends without
  // touching voxels; a third sees everything.
  std::vector<BlockInstances> blocks = {block_from(pts, gt, 0.0, 0.2, 0), block_from(pts, gt, 0.36, 0.5, 10),
                                        block_from(pts, gt, -10, 10, 20)};
  blocks.back().x0 = 5;
  const auto out = merge_blocks(pts, blocks, {});
  EXPECT_EQ(oracle::partition_agreement(out, gt), 1.0);
  EXPECT_EQ(std::set<int>(out.begin(), out.end()).size(), 2u);
}

TEST(Merge, Errors) {
  std::vector<int> gt;
  const auto pts = two_cubes(gt);
  BlockInstances bad;
  bad.point_indices = {0, 1};
  bad.local_ids = {0};
  EXPECT_THROW(merge_blocks(pts, std::vector<BlockInstances>{bad}, {}), Error);
  bad.local_ids = {0, 0};
  bad.point_indices = {0, pts.size()};
  EXPECT_THROW(merge_blocks(pts, std::vector<BlockInstances>{bad}, {}), Error);
  MergeConfig cfg;
  cfg.voxel_size = 0;
  EXPECT_THROW(merge_blocks(pts, std::vector<BlockInstances>{}, cfg), Error);
  const std::vector<int> short_sem = {0};
  EXPECT_THROW(merge_blocks(pts, std::vector<BlockInstances>{}, {}, short_sem), Error);
}

}  // namespace
}  // namespace saso::merge
