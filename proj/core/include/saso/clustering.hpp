#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace saso::clustering {

using Matrix = Eigen::MatrixXd;

struct MeanShiftConfig {
  double bandwidth = 0.6;
  int max_iters = 300;
  double convergence_tol = 1e-4;
  double merge_tol = 0.3;        // bandwidth / 2
  std::size_t max_seeds = 2048;  // seeds beyond this are subsampled (seeded)
  bool l1_assignment = false;    // final point -> mode assignment metric
};

struct ClusterResult {
  std::vector<int> assignments;  // dense ids in [0, num_clusters)
  Matrix modes;                  // num_clusters x E
  int num_clusters = 0;
};

// Flat-kernel mean shift seeded at every point (or a seeded subsample).
// Converged modes closer than merge_tol are merged, the more populated mode
// surviving; points go to the nearest surviving mode. Throws Error for an
// empty input or a non-positive bandwidth.
ClusterResult mean_shift(const Matrix& embeddings, const MeanShiftConfig& cfg,
                         std::uint64_t seed = 0);

// Majority ground-truth instance per cluster (ties -> lowest id); -1 for a
// cluster with no points.
std::vector<int> resolve_cluster_identity(std::span<const int> assignments,
                                          std::span<const int> gt_inst_labels);

struct ClusterSplit {
  std::vector<std::size_t> wrong;    // gt instance != cluster identity
  std::vector<std::size_t> correct;
};

std::vector<ClusterSplit> wrong_points(std::span<const int> assignments,
                                       std::span<const int> identities,
                                       std::span<const int> gt_inst_labels);

// Majority predicted class per cluster (ties -> lowest class); -1 if empty.
std::vector<int> assign_cluster_semantics(std::span<const int> assignments,
                                          std::span<const int> sem_predictions);

// Most frequent value; ties -> smallest value. Requires non-empty input.
int mode_of(std::span<const int> values);

}  // namespace saso::clustering
