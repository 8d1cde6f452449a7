#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace saso {

using Vec3 = Eigen::Vector3d;

struct Point {
  double x = 0, y = 0, z = 0;  // meters
  int r = 0, g = 0, b = 0;     // [0, 255]
  int sem = 0;                 // [0, C)
  int inst = 0;                // >= 0
};

struct Bounds {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  Vec3 extent() const { return max - min; }
};

struct Scene {
  std::string name;
  int num_classes = 0;
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  // Axis-aligned bounding box; all zeros for an empty scene.
  Bounds bounds() const;
};

std::vector<Vec3> positions(const Scene& scene);
std::vector<int> semantic_labels(const Scene& scene);
std::vector<int> instance_labels(const Scene& scene);

struct ValidateOptions {
  // Imported data may legitimately reuse an instance id across classes.
  bool require_single_class_instances = true;
};

// Throws ValidationError naming the first violated invariant.
void validate(const Scene& scene, const ValidateOptions& opts = {});

// `saso-scene v1` text format:
//   saso-scene v1
//   <N> <C>
//   x y z r g b sem inst      (N lines)
// '#' starts a comment; blank lines are ignored.
Scene parse_scene(std::istream& in, std::string name = {}, const ValidateOptions& opts = {});
Scene load_scene(const std::filesystem::path& path, const ValidateOptions& opts = {});
void write_scene(std::ostream& out, const Scene& scene);
void save_scene(const std::filesystem::path& path, const Scene& scene);

inline constexpr int kFeatureDim = 9;

// A fixed-size point sample cut from a scene cell on the X-Y plane.
struct Block {
  std::vector<std::size_t> point_indices;  // into the parent scene
  Eigen::MatrixXd features;                // rows = point_indices.size(), kFeatureDim columns
  std::vector<int> sem_labels;
  std::vector<int> inst_labels;
  double x0 = 0, y0 = 0;                   // cell origin
  std::size_t cell_index = 0;              // row-major over the cell grid (ix * ny + iy)

  std::size_t size() const { return point_indices.size(); }
};

using BlockPtr = std::shared_ptr<const Block>;

struct BlockGrid {
  double origin_x = 0, origin_y = 0;
  double cell = 1.0, stride = 0.5;
  std::size_t nx = 0, ny = 0;

  std::size_t num_cells() const { return nx * ny; }
  double cell_x0(std::size_t ix) const { return origin_x + static_cast<double>(ix) * stride; }
  double cell_y0(std::size_t iy) const { return origin_y + static_cast<double>(iy) * stride; }
};

struct CutOptions {
  double cell = 1.0;            // meters
  double stride = 0.5;          // meters
  std::size_t num_points = 4096;
  std::size_t min_points = 100;
  std::uint64_t seed = 0;
  // Emit ceil(population / num_points) blocks per cell so every point of the
  // cell lands in some block. Used at inference time.
  bool cover_all = false;
};

// Cell origins anchored at the scene's min X-Y corner; the last row/column
// may extend past the bounding box (clipped, not discarded).
BlockGrid block_grid(const Scene& scene, double cell, double stride);

// Deterministic under opts.seed: cell c draws from an RNG seeded by (seed, c).
std::vector<BlockPtr> cut_blocks(const Scene& scene, const CutOptions& opts);

// Columns: x, y, z, r/255, g/255, b/255, then xyz normalized to `room`.
// A zero-extent axis normalizes to 0.5.
Eigen::MatrixXd block_features(const Scene& scene, std::span<const std::size_t> indices,
                               const Bounds& room);

}  // namespace saso
