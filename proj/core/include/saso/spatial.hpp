#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "saso/scene.hpp"

namespace saso {

// Uniform-grid spatial hash over a fixed point set. Immutable after
// construction; concurrent queries are safe.
class GridIndex {
 public:
  using CellKey = std::array<std::int64_t, 3>;

  // Throws Error on cell_size <= 0 or a non-finite coordinate.
  GridIndex(std::span<const Vec3> points, double cell_size);

  // Indices i with |points[i] - center| <= radius, ascending.
  std::vector<std::size_t> ball_query(const Vec3& center, double radius) const;

  // Neighborhood of an indexed point; optionally drops the point itself.
  std::vector<std::size_t> ball_query_point(std::size_t i, double radius,
                                            bool exclude_self = false) const;

  // Unordered visit of every index inside the ball.
  template <typename Fn>
  void for_each_in_ball(const Vec3& center, double radius, Fn&& fn) const {
    const CellKey lo = key_of(center - Vec3::Constant(radius));
    const CellKey hi = key_of(center + Vec3::Constant(radius));
    const double r2 = radius * radius;
    for (auto x = lo[0]; x <= hi[0]; ++x)
      for (auto y = lo[1]; y <= hi[1]; ++y)
        for (auto z = lo[2]; z <= hi[2]; ++z) {
          auto it = cells_.find(CellKey{x, y, z});
          if (it == cells_.end()) continue;
          for (auto idx : it->second) {
            if ((points_[idx] - center).squaredNorm() <= r2) fn(static_cast<std::size_t>(idx));
          }
        }
  }

  double cell_size() const { return cell_size_; }
  std::size_t size() const { return points_.size(); }
  std::size_t occupied_cells() const { return cells_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  // Snapshot of the cell map, for inspection in tests and tools.
  std::vector<std::vector<std::size_t>> cell_contents() const;

 private:
  struct KeyHash {
    std::size_t operator()(const CellKey& k) const {
      std::uint64_t h = 1469598103934665603ULL;
      for (auto v : k) {
        h ^= static_cast<std::uint64_t>(v);
        h *= 1099511628211ULL;
      }
      return static_cast<std::size_t>(h);
    }
  };

  CellKey key_of(const Vec3& p) const;

  double cell_size_;
  std::vector<Vec3> points_;
  std::unordered_map<CellKey, std::vector<std::uint32_t>, KeyHash> cells_;
};

}  // namespace saso
