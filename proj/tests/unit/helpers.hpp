#pragma once

#include <random>
#include <vector>

#include "saso/scene.hpp"

namespace saso::testing {

inline Point make_point(double x, double y, double z, int sem = 0, int inst = 0, int r = 128,
                        int g = 128, int b = 128) {
  Point p;
  p.x = x;
  p.y = y;
  p.z = z;
  p.r = r;
  p.g = g;
  p.b = b;
  p.sem = sem;
  p.inst = inst;
  return p;
}

inline Scene uniform_scene(std::size_t n, double sx, double sy, std::uint64_t seed, int classes = 2) {
  Scene s;
  s.name = "uniform";
  s.num_classes = classes;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0, sx), uy(0, sy), uz(0, 1);
  for (std::size_t i = 0; i < n; ++i) s.points.push_back(make_point(ux(rng), uy(rng), uz(rng)));
  return s;
}

inline std::vector<Vec3> random_points(std::size_t n, double extent, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, extent);
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  return pts;
}

}  // namespace saso::testing
