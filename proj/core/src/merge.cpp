#include "saso/merge.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_map>

#include "saso/clustering.hpp"
#include "saso/error.hpp"
#include "saso/spatial.hpp"

namespace saso::merge {
namespace {

using VoxelKey = std::array<std::int64_t, 3>;

struct KeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto v : k) {
      h ^= static_cast<std::uint64_t>(v);
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

VoxelKey voxel_of(const Vec3& p, double size) {
  return {static_cast<std::int64_t>(std::floor(p.x() / size)),
          static_cast<std::int64_t>(std::floor(p.y() / size)),
          static_cast<std::int64_t>(std::floor(p.z() / size))};
}

}  // namespace

std::vector<int> densify(std::span<const int> labels) {
  std::unordered_map<int, int> remap;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = remap.emplace(labels[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  return out;
}

std::vector<int> merge_blocks(std::span<const Vec3> scene_points,
                              std::span<const BlockInstances> blocks, const MergeConfig& cfg,
                              std::span<const int> point_sem) {
  if (!(cfg.voxel_size > 0)) throw Error("merge: voxel size must be positive");
  if (!point_sem.empty() && point_sem.size() != scene_points.size()) {
    throw Error("merge: semantic labels differ from the point count");
  }
  std::vector<std::size_t> order(blocks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (blocks[a].x0 != blocks[b].x0) return blocks[a].x0 < blocks[b].x0;
    return blocks[a].y0 < blocks[b].y0;
  });

  struct Cell {
    int id;
    int sem;
  };
  std::unordered_map<VoxelKey, Cell, KeyHash> volume;
  std::vector<int> labels(scene_points.size(), -1);
  int next_id = 0;
  std::vector<int> parent;
  std::vector<std::size_t> ever;  // points ever labeled with each root id
  std::map<std::pair<int, int>, std::size_t> co;  // (id, root) -> points relabeled from id to root
  auto up = [&](int id) -> int& { return parent[static_cast<std::size_t>(id)]; };
  auto find = [&](int id) {
    while (up(id) != id) id = up(id) = up(up(id));
    return id;
  };
  for (auto b : order) {
    const auto& blk = blocks[b];
    if (blk.point_indices.size() != blk.local_ids.size()) {
      throw Error("merge: block point/label length mismatch");
    }
    std::map<int, std::set<VoxelKey>> voxels;
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t k = 0; k < blk.point_indices.size(); ++k) {
      const auto pi = blk.point_indices[k];
      if (pi >= scene_points.size()) throw Error("merge: point index outside the scene");
      members[blk.local_ids[k]].push_back(pi);
      voxels[blk.local_ids[k]].insert(voxel_of(scene_points[pi], cfg.voxel_size));
    }
    auto winner = [](const std::map<int, std::size_t>& votes) {
      std::pair<int, std::size_t> w{-1, 0};
      for (const auto& [id, n] : votes)
        if (n > w.second) w = {id, n};
      return w;
    };
    std::map<int, Cell> global;
    for (const auto& [local, vox] : voxels) {
      const auto& pts = members[local];
      int sem = 0;
      if (cfg.class_gating && !point_sem.empty()) {
        std::vector<int> s;
        s.reserve(pts.size());
        for (auto pi : pts) s.push_back(point_sem[pi]);
        sem = clustering::mode_of(s);
      }
      const double frac = cfg.overlap_frac;
      // Points already labeled by earlier blocks vote first.
      std::map<int, std::size_t> votes;
      std::size_t labeled = 0;
      for (auto pi : pts) {
        if (labels[pi] < 0) continue;
        ++votes[find(labels[pi])];
        ++labeled;
      }
      auto [gid, best] = winner(votes);
      if (gid >= 0 && static_cast<double>(best) >= frac * static_cast<double>(labeled)) {
        // An id whose points this instance largely covers is the same object
        // reached earlier through disjoint blocks.
        for (const auto& [id, n] : votes) {
          if (id == gid) continue;
          auto& shared = co[{id, gid}];
          shared += n;
          if (static_cast<double>(shared) >= cfg.unify_frac * static_cast<double>(ever[static_cast<std::size_t>(id)])) {
            up(id) = gid;
            ever[static_cast<std::size_t>(gid)] += ever[static_cast<std::size_t>(id)];
          }
        }
      } else {
        // Each voxel votes once for every same-class id in its 3x3x3
        // neighborhood, so sparse subsets of one region still meet.
        votes.clear();
        std::set<int> near;
        for (const auto& v : vox) {
          near.clear();
          for (std::int64_t dx = -1; dx <= 1; ++dx)
            for (std::int64_t dy = -1; dy <= 1; ++dy)
              for (std::int64_t dz = -1; dz <= 1; ++dz) {
                auto it = volume.find(VoxelKey{v[0] + dx, v[1] + dy, v[2] + dz});
                if (it != volume.end() && it->second.sem == sem) near.insert(find(it->second.id));
              }
          for (int id : near) ++votes[id];
        }
        std::tie(gid, best) = winner(votes);
        if (gid < 0 || static_cast<double>(best) < frac * static_cast<double>(vox.size())) {
          // Unanchored fragments are left to the nearest-point fill.
          gid = pts.size() < cfg.min_fragment_points ? -1 : next_id++;
          if (gid >= 0) {
            parent.push_back(gid);
            ever.push_back(0);
          }
        }
      }
      global[local] = {gid, sem};
    }
    for (const auto& [local, vox] : voxels) {
      if (global[local].id < 0) continue;
      for (const auto& v : vox) volume[v] = global[local];
    }
    for (std::size_t k = 0; k < blk.point_indices.size(); ++k) {
      const int gid = global[blk.local_ids[k]].id;
      if (gid < 0) continue;
      auto& l = labels[blk.point_indices[k]];
      const int root = find(gid);
      if (l < 0 || find(l) != root) ++ever[static_cast<std::size_t>(root)];
      l = root;
    }
  }

  for (auto& l : labels)
    if (l >= 0) l = find(l);
  // Fill: nearest labeled point of the same class, or of any class when the
  // class has none.
  const bool gated = cfg.class_gating && !point_sem.empty();
  std::map<int, std::vector<std::size_t>> pools;
  std::vector<std::size_t> all;
  for (std::size_t i = 0; i < scene_points.size(); ++i) {
    if (labels[i] < 0) continue;
    all.push_back(i);
    if (gated) pools[point_sem[i]].push_back(i);
  }
  if (all.size() == scene_points.size()) return densify(labels);
  if (all.empty()) return std::vector<int>(scene_points.size(), 0);
  std::map<int, std::pair<GridIndex, std::vector<std::size_t>*>> indices;
  auto index_for = [&](int sem) -> std::pair<GridIndex, std::vector<std::size_t>*>& {
    auto* pool = &all;
    if (gated) {
      auto it = pools.find(sem);
      if (it != pools.end()) pool = &it->second;
      else sem = -1;
    } else {
      sem = -1;
    }
    auto it = indices.find(sem);
    if (it == indices.end()) {
      std::vector<Vec3> pts;
      pts.reserve(pool->size());
      for (auto i : *pool) pts.push_back(scene_points[i]);
      it = indices.emplace(sem, std::make_pair(GridIndex(pts, std::max(cfg.voxel_size * 4, 0.1)), pool)).first;
    }
    return it->second;
  };
  std::vector<int> filled = labels;
  for (std::size_t i = 0; i < scene_points.size(); ++i) {
    if (labels[i] >= 0) continue;
    auto& [index, pool] = index_for(gated ? point_sem[i] : -1);
    double radius = index.cell_size();
    std::vector<std::size_t> near;
    while ((near = index.ball_query(scene_points[i], radius)).empty()) radius *= 2;
    std::size_t best = near.front();
    double bd = (scene_points[(*pool)[best]] - scene_points[i]).squaredNorm();
    for (auto j : near) {
      const double d = (scene_points[(*pool)[j]] - scene_points[i]).squaredNorm();
      if (d < bd || (d == bd && j < best)) {
        bd = d;
        best = j;
      }
    }
    filled[i] = labels[(*pool)[best]];
  }
  return densify(filled);

}

}  // namespace saso::merge
