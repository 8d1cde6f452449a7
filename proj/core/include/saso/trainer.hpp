#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saso/clustering.hpp"
#include "saso/losses.hpp"
#include "saso/merge.hpp"
#include "saso/metrics.hpp"
#include "saso/msa.hpp"
#include "saso/net.hpp"
#include "saso/scene.hpp"

namespace saso::train {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 4;  // blocks per step; losses are averaged over the batch
  net::AdamConfig adam;
  losses::InstanceLossConfig loss;
  double sem_weight = 1.0;

  // Clustering-in-the-loop: from this epoch on (inclusive, 0-based), the
  // instance loss gains the misclustered-point term.
  int spco_start_epoch = 10;
  clustering::MeanShiftConfig spco_cluster{.max_seeds = 256};
  double spco_fraction = 1.0;  // share of blocks clustered per epoch

  bool wfs = false;
  std::size_t wfs_threshold = 100;
  double wfs_delta = 1e-4;

  CutOptions cut{.num_points = 4096};
  net::NetShape net;

  int eval_every = 0;  // epochs between validation passes; 0 disables
  std::uint64_t seed = 0;

  std::filesystem::path checkpoint_dir;  // empty: no per-epoch checkpoints
  std::filesystem::path log_path;        // empty: no line-delimited JSON log

  // Throws Error naming the offending key.
  void validate() const;
};

struct InferConfig {
  CutOptions cut{.num_points = 4096, .min_points = 1, .cover_all = true};
  clustering::MeanShiftConfig cluster{.max_seeds = 512};
  merge::MergeConfig merge;
  bool use_msa = false;
  msa::MsaConfig msa;
  std::uint64_t seed = 0;
};

struct StepRecord {
  int epoch = 0;
  std::int64_t step = 0;
  std::map<std::string, double> terms;  // batch means of each active term
  double total = 0;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0;
  std::optional<metrics::EvalReport> validation;
};

struct RunRecord {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::string config_hash;
  std::size_t train_blocks = 0;
  double wall_seconds = 0;
};

struct TrainResult {
  net::Checkpoint checkpoint;
  RunRecord record;
};

// Per-block network outputs, replaceable for tests and oracle studies.
struct BlockOutputs {
  Eigen::MatrixXd logits;      // Np x C
  Eigen::MatrixXd embeddings;  // Np x E
};
using EmbeddingSource = std::function<BlockOutputs(const Block&)>;

// Blocks used for training: cut every scene (per-scene seeds derived from
// cfg.seed), then optionally oversample with water filling.
std::vector<BlockPtr> training_blocks(std::span<const Scene> scenes, const TrainConfig& cfg,
                                      int num_classes);

// Throws NumericError if any loss becomes non-finite.
TrainResult train(std::span<const Scene> train_scenes, std::span<const Scene> val_scenes,
                  const TrainConfig& cfg, const InferConfig& val_infer = {});

struct Prediction {
  std::vector<int> sem;       // per point, after optional MSA refinement
  std::vector<int> inst;      // per point, dense global ids
  std::vector<int> inst_sem;  // per instance: majority semantic label
  Eigen::MatrixXd p_sem;      // per point averaged softmax (before refinement)
};

Prediction infer(const Scene& scene, const net::NetParams& params, const InferConfig& cfg,
                 std::span<const msa::AssociationMap> maps = {});
Prediction infer(const Scene& scene, const EmbeddingSource& source, int num_classes,
                 const InferConfig& cfg, std::span<const msa::AssociationMap> maps = {});

// Prediction written back onto the scene geometry (sem/inst columns replaced).
Scene prediction_scene(const Scene& scene, const Prediction& pred);

metrics::EvalReport evaluate(std::span<const Scene> scenes, std::span<const Prediction> preds,
                             int num_classes);

std::string config_to_json(const TrainConfig& cfg);
// Unknown keys are rejected; missing keys keep `base` values.
TrainConfig config_from_json(const std::string& text, const TrainConfig& base = {});
std::string infer_config_to_json(const InferConfig& cfg);
InferConfig infer_config_from_json(const std::string& text, const InferConfig& base = {});
std::string config_hash(const TrainConfig& cfg);

std::string step_to_json(const StepRecord& step);

}  // namespace saso::train
