#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "saso/scene.hpp"

// Constructed scenes shared by unit and acceptance tests.
namespace saso::fixture {

// A 3 m x 1 m floor strip on a 5 cm grid split into three class bands
// (x < 1, 1 <= x < 2, x >= 2), with two bands of interleaved heights.
Scene band_scene();

struct FlipCase {
  Scene scene;
  std::vector<int> noisy;  // predicted labels: ground truth with a seeded 10% flipped
  Eigen::MatrixXd p_sem;   // 0.45 on the predicted label, the rest spread evenly
  std::size_t flipped = 0;
};

FlipCase flip_case(std::uint64_t seed);

}  // namespace saso::fixture
