#include "fixtures.hpp"

#include <random>

namespace saso::fixture {

Scene band_scene() {
  Scene s;
  s.name = "bands";
  s.num_classes = 3;
  for (int ix = 0; ix < 60; ++ix) {
    for (int iy = 0; iy < 20; ++iy) {
      Point p;
      p.x = 0.05 * ix + 0.025;
      p.y = 0.05 * iy + 0.025;
      p.sem = p.x < 1.0 ? 0 : (p.x < 2.0 ? 1 : 2);
      p.z = p.sem == 0 ? 0.0 : 0.05 * ((ix + iy) % 2);
      p.inst = p.sem;
      s.points.push_back(p);
    }
  }
  return s;
}

FlipCase flip_case(std::uint64_t seed) {
  FlipCase fc;
  fc.scene = band_scene();
  const auto n = fc.scene.points.size();
  const int C = fc.scene.num_classes;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> shift(1, C - 1);
  fc.noisy.resize(n);
  fc.p_sem = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), C, 0.55 / (C - 1));
  for (std::size_t i = 0; i < n; ++i) {
    int label = fc.scene.points[i].sem;
    if (u(rng) < 0.1) {
      label = (label + shift(rng)) % C;
      ++fc.flipped;
    }
    fc.noisy[i] = label;
    fc.p_sem(static_cast<Eigen::Index>(i), label) = 0.45;
  }
  return fc;
}

}  // namespace saso::fixture
