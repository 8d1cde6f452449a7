#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "saso/scene.hpp"

// Fuses per-block instance labels into scene-level instances through a
// shared voxel occupancy grid.
namespace saso::merge {

struct MergeConfig {
  double voxel_size = 0.05;   // meters
  double overlap_frac = 0.3;  // adoption share
  double unify_frac = 0.5;    // share of an id's points that must be re-seen under another id
  std::size_t min_fragment_points = 8;  // smaller unanchored instances get no id of their own
  bool class_gating = true;             // voxel votes only from ids of the instance's class
};

struct BlockInstances {
  std::vector<std::size_t> point_indices;  // into the scene
  std::vector<int> local_ids;              // same length
  double x0 = 0, y0 = 0;
};

// Blocks are processed in ascending (x0, y0). For each local instance:
//  - points already labeled by earlier blocks vote with their (resolved) ids;
//    the top id is adopted when it holds overlap_frac of those votes, and any
//    other voted id whose accumulated shared points reach unify_frac of all
//    points it ever held is unified with it;
//  - with no point votes, each of the instance's voxels votes once for every
//    id of the same class in its 3x3x3 neighborhood; the top id is adopted when
//    it reaches overlap_frac of the instance's voxels;
//  - otherwise a new id is minted, except for instances under
//    min_fragment_points, which stay unlabeled.
// The instance's voxels are then written with its id and its points take it.
// Remaining unlabeled points take the id of the nearest labeled point of the
// same class (any class if that class has none). `point_sem` (per scene point,
// may be empty to disable class gating) gives the classes; an instance's class
// is the mode over its points. Output ids are dense in [0, K), numbered by
// first occurrence.
std::vector<int> merge_blocks(std::span<const Vec3> scene_points,
                              std::span<const BlockInstances> blocks, const MergeConfig& cfg,
                              std::span<const int> point_sem = {});

// Renumber labels densely by first occurrence.
std::vector<int> densify(std::span<const int> labels);

}  // namespace saso::merge
