#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

// Per-point network: a shared ReLU trunk feeding a semantic head (logits)
// and an instance head (embeddings). Gradients are derived by hand.
namespace saso::net {

using Matrix = Eigen::MatrixXd;

struct NetShape {
  int input = 9;
  std::vector<int> trunk = {64, 64};
  int classes = 13;
  int embed = 5;
  // Free mode: the parameters are the per-point logits and embeddings
  // themselves (no weight sharing). `free_points` rows.
  bool free_mode = false;
  int free_points = 0;
};

// Flat tensor list. Network layout: for each trunk layer k, weight (in x out)
// at 2k and bias (1 x out) at 2k+1; then semantic weight/bias, then instance
// weight/bias. Free-mode layout: {logits (Np x C), embeddings (Np x E)}.
struct NetParams {
  NetShape shape;
  std::vector<Matrix> tensors;

  std::size_t num_parameters() const;
  std::size_t num_trunk_layers() const { return shape.trunk.size(); }
};

using Gradients = std::vector<Matrix>;

// Glorot-uniform weights, zero biases.
NetParams init_params(const NetShape& shape, std::uint64_t seed);
NetParams zero_params(const NetShape& shape);
// Free-mode parameters drawn from N(0, init_std^2).
NetParams free_mode_params(int num_points, int classes, int embed, std::uint64_t seed = 0,
                           double init_std = 0.1);

Gradients zeros_like(const NetParams& params);

struct ForwardTrace {
  std::vector<Matrix> activations;      // trunk inputs: A0 = features, ..., A_L
  std::vector<Matrix> pre_activations;  // Z_k = A_k W_k + b_k
};

struct ForwardResult {
  Matrix logits;      // Np x C
  Matrix embeddings;  // Np x E
  ForwardTrace trace;
};

// Throws Error on a feature-width (or free-mode row count) mismatch.
ForwardResult forward(const NetParams& params, const Matrix& features);

Gradients backward(const ForwardTrace& trace, const NetParams& params, const Matrix& dlogits,
                   const Matrix& dembeddings);

// grads += other
void accumulate(Gradients& grads, const Gradients& other, double scale = 1.0);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t step = 0;
};

AdamState init_adam(const NetParams& params);
void adam_step(NetParams& params, const Gradients& grads, AdamState& state, const AdamConfig& cfg);

bool all_finite(const NetParams& params);

struct Checkpoint {
  NetParams params;
  AdamState adam;
  std::string config_hash;
  std::string config_json;  // resolved training config, for provenance
  int epoch = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

}  // namespace saso::net
