#include "saso/wfs.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "saso/error.hpp"
#include "saso/log.hpp"

namespace saso::wfs {
namespace {

Inventory tally(std::span<const BlockPtr> blocks, int ncat, std::size_t threshold,
                std::span<const int> mapping, int nc_in) {
  Inventory inv;
  inv.sem_b.resize(static_cast<std::size_t>(ncat));
  inv.vb.assign(static_cast<std::size_t>(ncat), 0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(ncat));
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    std::fill(counts.begin(), counts.end(), 0);
    for (int label : blocks[b]->sem_labels) {
      if (label < 0 || label >= nc_in) {
        throw Error("block " + std::to_string(b) + ": semantic label " + std::to_string(label) +
                    " outside [0," + std::to_string(nc_in) + ")");
      }
      int cat = mapping.empty() ? label : mapping[static_cast<std::size_t>(label)];
      ++counts[static_cast<std::size_t>(cat)];
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] > threshold) {
        inv.sem_b[c].push_back(b);
        ++inv.vb[c];
      }
    }
  }
  return inv;
}

}  // namespace

Inventory build_inventory(std::span<const BlockPtr> blocks, int nc, std::size_t threshold) {
  if (nc <= 0) throw Error("category count must be positive");
  return tally(blocks, nc, threshold, {}, nc);
}

Inventory build_object_inventory(std::span<const BlockPtr> objects,
                                 std::span<const int> super_category, int num_super,
                                 std::size_t threshold) {
  if (num_super <= 0) throw Error("super-category count must be positive");
  for (int s : super_category) {
    if (s < 0 || s >= num_super) throw Error("super-category id out of range");
  }
  return tally(objects, num_super, threshold, super_category,
               static_cast<int>(super_category.size()));
}

std::size_t fill_iterations(double delta) {
  if (!(delta > 0)) throw Error("delta must be positive");
  return static_cast<std::size_t>(std::ceil((1.0 - 1e-12) / delta));
}

FillResult water_fill(std::span<const double> op, double delta) {
  if (!(delta > 0)) throw Error("delta must be positive");
  if (op.empty()) throw Error("no categories present");
  double total = 0;
  for (double v : op) {
    if (!(v >= 0) || !std::isfinite(v)) throw Error("probabilities must be finite and >= 0");
    total += v;
  }
  if (total <= 0) throw Error("no categories present (all-zero probabilities)");

  constexpr double kTieTol = 1e-12;
  FillResult res;
  res.steps.assign(op.size(), 0);
  // Running level recomputed from the step count to avoid drift.
  auto level = [&](std::size_t c) { return op[c] + static_cast<double>(res.steps[c]) * delta; };

  res.iterations = fill_iterations(delta);
  for (std::size_t it = 0; it < res.iterations; ++it) {
    std::size_t idx = 0;
    double best = level(0);
    for (std::size_t c = 1; c < op.size(); ++c) {
      double v = level(c);
      if (v < best - kTieTol) {
        best = v;
        idx = c;
      }
    }
    ++res.steps[idx];
  }
  res.sp.resize(op.size());
  res.op_filled.resize(op.size());
  for (std::size_t c = 0; c < op.size(); ++c) {
    res.sp[c] = static_cast<double>(res.steps[c]) * delta;
    res.op_filled[c] = level(c);
  }
  return res;
}

SamplingPlan make_plan(Inventory inventory, std::size_t num_blocks, double delta,
                       std::size_t threshold) {
  SamplingPlan plan;
  plan.delta = delta;
  plan.threshold = threshold;
  plan.num_blocks = num_blocks;
  plan.vb = std::move(inventory.vb);
  plan.sem_b = std::move(inventory.sem_b);
  const double sum = static_cast<double>(std::accumulate(plan.vb.begin(), plan.vb.end(), std::size_t{0}));
  if (sum == 0) throw Error("no categories present: every inventory is empty");
  plan.op_original.resize(plan.vb.size());
  for (std::size_t c = 0; c < plan.vb.size(); ++c) {
    plan.op_original[c] = static_cast<double>(plan.vb[c]) / sum;
  }
  auto fill = water_fill(plan.op_original, delta);
  plan.sp = std::move(fill.sp);
  plan.op_filled = std::move(fill.op_filled);
  plan.iterations = fill.iterations;
  return plan;
}

SamplingPlan make_plan(std::span<const BlockPtr> blocks, int nc, std::size_t threshold,
                       double delta) {
  return make_plan(build_inventory(blocks, nc, threshold), blocks.size(), delta, threshold);
}

std::vector<std::size_t> draw_counts(const SamplingPlan& plan) {
  std::vector<std::size_t> out(plan.sp.size());
  for (std::size_t c = 0; c < plan.sp.size(); ++c) {
    out[c] = static_cast<std::size_t>(std::floor(plan.sp[c] * static_cast<double>(plan.num_blocks) + 0.5));
  }
  return out;
}

std::vector<BlockPtr> resample_blocks(std::span<const BlockPtr> blocks, const SamplingPlan& plan,
                                      std::uint64_t seed) {
  std::vector<BlockPtr> out(blocks.begin(), blocks.end());
  const auto counts = draw_counts(plan);
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) continue;
    const auto& inv = plan.sem_b[c];
    if (inv.empty()) {
      log::warn("wfs: category " + std::to_string(c) + " has sampling share " +
                std::to_string(plan.sp[c]) + " but no blocks; skipped");
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, inv.size() - 1);
    for (std::size_t k = 0; k < counts[c]; ++k) {
      std::size_t b = inv[pick(rng)];
      if (b >= blocks.size()) throw Error("sampling plan references a block outside the list");
      out.push_back(blocks[b]);
    }
  }
  return out;
}

}  // namespace saso::wfs
