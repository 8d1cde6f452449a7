#include "saso/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "saso/error.hpp"

namespace saso {

GridIndex::GridIndex(std::span<const Vec3> points, double cell_size)
    : cell_size_(cell_size), points_(points.begin(), points.end()) {
  if (!(cell_size > 0) || !std::isfinite(cell_size)) {
    throw Error("grid cell size must be positive and finite");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!points_[i].allFinite()) {
      throw Error("non-finite coordinate at point " + std::to_string(i));
    }
    cells_[key_of(points_[i])].push_back(static_cast<std::uint32_t>(i));
  }
}

GridIndex::CellKey GridIndex::key_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_size_))};
}

std::vector<std::size_t> GridIndex::ball_query(const Vec3& center, double radius) const {
  std::vector<std::size_t> out;
  if (points_.empty()) return out;
  if (radius >= 0 && std::isfinite(radius)) {
    // Very large radii: fall back to a scan rather than iterating empty cells.
    const double span = 2 * radius / cell_size_ + 1;
    if (span * span * span > static_cast<double>(cells_.size()) * 4) {
      const double r2 = radius * radius;
      for (std::size_t i = 0; i < points_.size(); ++i) {
        if ((points_[i] - center).squaredNorm() <= r2) out.push_back(i);
      }
      return out;
    }
    for_each_in_ball(center, radius, [&](std::size_t i) { out.push_back(i); });
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> GridIndex::ball_query_point(std::size_t i, double radius,
                                                     bool exclude_self) const {
  auto out = ball_query(points_.at(i), radius);
  if (exclude_self) out.erase(std::remove(out.begin(), out.end(), i), out.end());
  return out;
}

std::vector<std::vector<std::size_t>> GridIndex::cell_contents() const {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(cells_.size());
  for (const auto& [key, idx] : cells_) out.emplace_back(idx.begin(), idx.end());
  return out;
}

}  // namespace saso
