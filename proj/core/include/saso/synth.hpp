#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "saso/scene.hpp"

// Synthetic labeled rooms: a floor, four walls and axis-aligned box or
// cylinder furniture, sampled uniformly by surface area.
namespace saso::synth {

enum class Shape { box, cylinder };

struct ObjectClass {
  int sem = 0;
  Shape shape = Shape::box;
  // Footprint x/y and height ranges in meters. Cylinders use size_x as the
  // diameter and ignore size_y.
  std::array<double, 2> size_x{0.4, 0.6};
  std::array<double, 2> size_y{0.4, 0.6};
  std::array<double, 2> height{0.4, 0.8};
  // Objects per room, drawn uniformly from [count_min, count_max].
  int count_min = 0;
  int count_max = 0;
  // Probability that the class appears in a room at all.
  double presence = 1.0;
};

struct SynthConfig {
  std::string name = "room";
  std::array<double, 2> room_x{3.5, 4.5};  // extent ranges, meters
  std::array<double, 2> room_y{3.5, 4.5};
  double wall_height = 1.5;
  double density = 150.0;        // points per square meter
  double color_jitter = 10.0;    // per-point color std, in 0-255 units
  double instance_tint = 0.0;    // per-instance color offset std
  double min_gap = 0.3;          // between object footprints; <= 0 allows contact
  double wall_margin = 0.15;     // object footprint distance from walls
  int adjacent_pairs = 0;        // extra same-class pairs placed in contact
  int adjacent_class = -1;       // class of the pairs (an entry of `objects`)
  int max_retries = 500;
  int num_classes = 8;
  std::vector<std::string> class_names;
  std::vector<std::array<int, 3>> palette;  // base color per class
  std::vector<ObjectClass> objects;
  int floor_class = 0;
  int wall_class = 1;
  std::uint64_t seed = 0;
};

// Eight classes: floor, wall, table, chair, cabinet, sofa, lamp, bin.
SynthConfig default_config();

// Throws Error when objects cannot be placed after max_retries attempts or
// the configuration is invalid. Deterministic under cfg.seed.
Scene generate(const SynthConfig& cfg);

struct ImbalanceReport {
  std::vector<std::size_t> points;      // per class
  std::vector<std::size_t> instances;   // per class
  std::vector<double> point_freq;
  std::vector<double> instance_freq;
};

// Throws Error on an empty scene.
ImbalanceReport imbalance_report(const Scene& scene);

std::string config_to_json(const SynthConfig& cfg);
SynthConfig config_from_json(const std::string& text);

}  // namespace saso::synth
