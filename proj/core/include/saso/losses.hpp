#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

// Training objectives with analytic gradients. Embedding losses use the l1
// metric with squared hinges; the l1 subgradient at a zero coordinate is 0.
namespace saso::losses {

using Matrix = Eigen::MatrixXd;

struct InstanceLossConfig {
  double zeta_v = 0.5;        // pull margin
  double zeta_d = 1.5;        // push margin (means repel up to 2 * zeta_d)
  double lambda_reg = 0.001;
  // L_cluster normalizer: false -> all clusters, true -> only clusters with
  // misassigned points.
  bool cluster_impure_only = false;
};

struct LossOutput {
  double value = 0;
  Matrix gradient;  // same shape as the differentiated argument
  std::map<std::string, double> terms;
};

struct InstanceGroups {
  std::vector<int> ids;              // distinct instance ids, ascending
  std::vector<std::size_t> counts;   // points per instance
  std::vector<int> row_of_point;     // per point: row into ids/means
  Matrix means;                      // I x E
};

// Throws Error if labels is empty or its length differs from the row count.
InstanceGroups instance_means(const Matrix& embeddings, std::span<const int> inst_labels);

// d/d(points) of a loss given its gradient w.r.t. the instance means.
Matrix chain_means_to_points(const Matrix& dmeans, const InstanceGroups& groups);

// Pull term. Differentiates through the means (full chain rule).
LossOutput l_in(const Matrix& embeddings, std::span<const int> inst_labels,
                const InstanceLossConfig& cfg);
// Push term over ordered pairs of means; gradient w.r.t. the means.
LossOutput l_out(const Matrix& means, const InstanceLossConfig& cfg);
// Mean l1 norm of the instance means; gradient w.r.t. the means.
LossOutput l_reg(const Matrix& means);

// L_in + L_out + lambda * L_reg, gradient w.r.t. the embeddings.
LossOutput l_base(const Matrix& embeddings, std::span<const int> inst_labels,
                  const InstanceLossConfig& cfg);

// Repels points that clustering put in the wrong instance from the mean of
// the cluster's correctly assigned points. Cluster identity is the majority
// ground-truth instance; gradient flows to the wrong points and, through the
// mean, to the correct ones.
LossOutput l_cluster(const Matrix& embeddings, std::span<const int> assignments,
                     std::span<const int> inst_labels, const InstanceLossConfig& cfg);

LossOutput l_ins(const Matrix& embeddings, std::span<const int> inst_labels,
                 std::span<const int> assignments, const InstanceLossConfig& cfg);

// Mean softmax cross entropy; gradient (softmax - onehot) / Np.
LossOutput cross_entropy(const Matrix& logits, std::span<const int> sem_labels);

Matrix softmax_rows(const Matrix& logits);

}  // namespace saso::losses
