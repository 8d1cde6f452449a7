#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "saso/scene.hpp"

// Water Filling Sampling: block-level oversampling that lifts rare
// categories toward a common probability "water level".
namespace saso::wfs {

struct Inventory {
  std::vector<std::vector<std::size_t>> sem_b;  // per category: indices into the block list
  std::vector<std::size_t> vb;                  // per category: sem_b[c].size()
};

// Block b is listed for category c iff strictly more than `threshold` of its
// points carry label c. Throws Error on a label outside [0, nc).
Inventory build_inventory(std::span<const BlockPtr> blocks, int nc, std::size_t threshold);

// Part-segmentation variant: each entry is a whole object, and labels are
// first mapped through `super_category` (category -> super-category id).
Inventory build_object_inventory(std::span<const BlockPtr> objects,
                                 std::span<const int> super_category, int num_super,
                                 std::size_t threshold);

struct FillResult {
  std::vector<double> sp;          // added probability per category, multiples of delta
  std::vector<double> op_filled;   // op + sp
  std::vector<std::size_t> steps;  // sp[c] == steps[c] * delta
  std::size_t iterations = 0;
};

// Repeatedly add delta to the smallest entry of the running probabilities
// until the added mass reaches 1. Ties go to the lowest index; entries within
// 1e-12 of each other count as tied. Throws Error if op is all zero.
FillResult water_fill(std::span<const double> op, double delta);

// Number of fill steps water_fill performs for a given delta.
std::size_t fill_iterations(double delta);

struct SamplingPlan {
  std::vector<std::size_t> vb;
  std::vector<std::vector<std::size_t>> sem_b;
  std::vector<double> op_original;
  std::vector<double> op_filled;
  std::vector<double> sp;
  double delta = 1e-4;
  std::size_t threshold = 100;
  std::size_t num_blocks = 0;
  std::size_t iterations = 0;

  int num_categories() const { return static_cast<int>(vb.size()); }
};

SamplingPlan make_plan(Inventory inventory, std::size_t num_blocks, double delta,
                       std::size_t threshold);
SamplingPlan make_plan(std::span<const BlockPtr> blocks, int nc, std::size_t threshold,
                       double delta);

// Per-category draw counts: round-half-up of sp[c] * num_blocks.
std::vector<std::size_t> draw_counts(const SamplingPlan& plan);

// Original blocks followed by the oversampled references, drawn uniformly
// with replacement from each category's inventory. Categories with a
// positive share but no inventory are skipped with a warning.
std::vector<BlockPtr> resample_blocks(std::span<const BlockPtr> blocks, const SamplingPlan& plan,
                                      std::uint64_t seed);

std::string plan_to_json(const SamplingPlan& plan, std::span<const std::string> class_names = {});

}  // namespace saso::wfs
