#include "saso/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "saso/error.hpp"
#include "saso/log.hpp"
#include "saso/wfs.hpp"

namespace saso::train {
namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 over the combined value
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void check_finite(const std::map<std::string, double>& terms, int epoch, std::int64_t step) {
  for (const auto& [k, v] : terms) {
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "non-finite loss at epoch " << epoch << " step " << step << ":";
      for (const auto& [kk, vv] : terms) msg << ' ' << kk << '=' << vv;
      throw NumericError(msg.str());
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw Error("epochs must be >= 1");
  if (batch_size < 1) throw Error("batch_size must be >= 1");
  if (spco_start_epoch < 0) throw Error("spco_start_epoch must be >= 0");
  if (!(adam.lr > 0)) throw Error("lr must be positive");
  if (!(spco_fraction >= 0 && spco_fraction <= 1)) throw Error("spco_fraction must lie in [0,1]");
  if (!(wfs_delta > 0)) throw Error("wfs_delta must be positive");
  if (loss.zeta_v < 0 || loss.zeta_d < 0 || loss.lambda_reg < 0) {
    throw Error("loss margins and lambda_reg must be non-negative");
  }
  if (!(cut.cell > 0) || !(cut.stride > 0) || cut.num_points == 0) {
    throw Error("cut cell, stride and num_points must be positive");
  }
}

std::vector<BlockPtr> training_blocks(std::span<const Scene> scenes, const TrainConfig& cfg,
                                      int num_classes) {
  std::vector<BlockPtr> blocks;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    CutOptions cut = cfg.cut;
    cut.cover_all = false;
    cut.seed = mix(cfg.seed, s);
    auto b = cut_blocks(scenes[s], cut);
    blocks.insert(blocks.end(), b.begin(), b.end());
  }
  if (cfg.wfs && !blocks.empty()) {
    const auto plan = wfs::make_plan(blocks, num_classes, cfg.wfs_threshold, cfg.wfs_delta);
    blocks = wfs::resample_blocks(blocks, plan, mix(cfg.seed, 0x5746u));
  }
  return blocks;
}

TrainResult train(std::span<const Scene> train_scenes, std::span<const Scene> val_scenes,
                  const TrainConfig& cfg, const InferConfig& val_infer) {
  cfg.validate();
  if (train_scenes.empty()) throw Error("train: no training scenes");
  const auto t0 = std::chrono::steady_clock::now();
  const int num_classes = train_scenes.front().num_classes;

  const auto blocks = training_blocks(train_scenes, cfg, num_classes);
  if (blocks.empty()) throw Error("train: no blocks passed the min_points filter");

  net::NetShape shape = cfg.net;
  shape.input = kFeatureDim;
  shape.classes = num_classes;

  TrainResult result;
  auto& ckpt = result.checkpoint;
  ckpt.params = net::init_params(shape, mix(cfg.seed, 0x4E4554u));
  ckpt.adam = net::init_adam(ckpt.params);
  ckpt.config_hash = config_hash(cfg);
  ckpt.config_json = config_to_json(cfg);
  auto& record = result.record;
  record.config_hash = ckpt.config_hash;
  record.train_blocks = blocks.size();

  std::ofstream log_file;
  if (!cfg.log_path.empty()) {
    log_file.open(cfg.log_path);
    if (!log_file) throw Error("cannot open training log " + cfg.log_path.string());
  }

  std::mt19937_64 rng(mix(cfg.seed, 0x5348u));
  std::vector<std::size_t> order(blocks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::int64_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const bool spco = epoch >= cfg.spco_start_epoch;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    double epoch_loss = 0;
    std::size_t epoch_steps = 0;

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double inv_b = 1.0 / static_cast<double>(end - start);
      net::Gradients grads = net::zeros_like(ckpt.params);
      StepRecord rec;
      rec.epoch = epoch;
      rec.step = step;

      for (std::size_t k = start; k < end; ++k) {
        const Block& blk = *blocks[order[k]];
        auto fwd = net::forward(ckpt.params, blk.features);
        auto ce = losses::cross_entropy(fwd.logits, blk.sem_labels);
        losses::LossOutput ins;
        if (spco && (cfg.spco_fraction >= 1.0 || coin(rng) < cfg.spco_fraction)) {
          const auto cl = clustering::mean_shift(fwd.embeddings, cfg.spco_cluster,
                                                 mix(mix(cfg.seed, static_cast<std::uint64_t>(step)), k));
          ins = losses::l_ins(fwd.embeddings, blk.inst_labels, cl.assignments, cfg.loss);
        } else {
          ins = losses::l_base(fwd.embeddings, blk.inst_labels, cfg.loss);
        }
        auto g = net::backward(fwd.trace, ckpt.params, cfg.sem_weight * ce.gradient, ins.gradient);
        net::accumulate(grads, g, inv_b);
        rec.terms["L_sem"] += ce.value * inv_b;
        for (const auto& [name, v] : ins.terms) rec.terms[name] += v * inv_b;
        rec.total += (cfg.sem_weight * ce.value + ins.value) * inv_b;
      }
      rec.terms["total"] = rec.total;
      check_finite(rec.terms, epoch, step);
      net::adam_step(ckpt.params, grads, ckpt.adam, cfg.adam);
      if (!net::all_finite(ckpt.params)) {
        throw NumericError("parameters became non-finite at epoch " + std::to_string(epoch) +
                           " step " + std::to_string(step));
      }
      if (log_file) log_file << step_to_json(rec) << '\n';
      epoch_loss += rec.total;
      ++epoch_steps;
      record.steps.push_back(std::move(rec));
      ++step;
    }

    EpochRecord er;
    er.epoch = epoch;
    er.mean_loss = epoch_steps ? epoch_loss / static_cast<double>(epoch_steps) : 0.0;
    if (cfg.eval_every > 0 && !val_scenes.empty() && (epoch + 1) % cfg.eval_every == 0) {
      std::vector<Prediction> preds;
      for (const auto& s : val_scenes) preds.push_back(infer(s, ckpt.params, val_infer));
      er.validation = evaluate(val_scenes, preds, num_classes);
    }
    log::info("epoch " + std::to_string(epoch) + " mean loss " + std::to_string(er.mean_loss));
    record.epochs.push_back(std::move(er));
    ckpt.epoch = epoch + 1;
    if (!cfg.checkpoint_dir.empty()) {
      std::filesystem::create_directories(cfg.checkpoint_dir);
      net::save_checkpoint(cfg.checkpoint_dir / ("epoch_" + std::to_string(epoch) + ".json"), ckpt);
    }
  }
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

Prediction infer(const Scene& scene, const net::NetParams& params, const InferConfig& cfg,
                 std::span<const msa::AssociationMap> maps) {
  if (!params.shape.free_mode && params.shape.classes != scene.num_classes) {
    throw Error("infer: checkpoint has " + std::to_string(params.shape.classes) +
                " classes, scene has " + std::to_string(scene.num_classes));
  }
  EmbeddingSource src = [&](const Block& b) {
    auto fwd = net::forward(params, b.features);
    return BlockOutputs{std::move(fwd.logits), std::move(fwd.embeddings)};
  };
  return infer(scene, src, scene.num_classes, cfg, maps);
}

Prediction infer(const Scene& scene, const EmbeddingSource& source, int num_classes,
                 const InferConfig& cfg, std::span<const msa::AssociationMap> maps) {
  if (cfg.use_msa && maps.empty()) throw Error("infer: MSA enabled but no association maps given");
  Prediction pred;
  const auto n = static_cast<Eigen::Index>(scene.size());
  pred.p_sem = Eigen::MatrixXd::Zero(n, num_classes);
  if (scene.empty()) return pred;

  CutOptions cut = cfg.cut;
  cut.cover_all = true;
  cut.seed = cfg.seed;
  const auto blocks = cut_blocks(scene, cut);
  Eigen::VectorXd hits = Eigen::VectorXd::Zero(n);
  std::vector<merge::BlockInstances> local;
  local.reserve(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Block& blk = *blocks[b];
    const BlockOutputs out = source(blk);
    if (out.logits.rows() != static_cast<Eigen::Index>(blk.size()) ||
        out.logits.cols() != num_classes || out.embeddings.rows() != out.logits.rows()) {
      throw Error("infer: embedding source returned mismatched shapes");
    }
    const Eigen::MatrixXd prob = losses::softmax_rows(out.logits);
    for (std::size_t k = 0; k < blk.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(blk.point_indices[k]);
      pred.p_sem.row(i) += prob.row(static_cast<Eigen::Index>(k));
      hits(i) += 1;
    }
    const auto cl = clustering::mean_shift(out.embeddings, cfg.cluster, mix(cfg.seed, b));
    local.push_back({blk.point_indices, cl.assignments, blk.x0, blk.y0});
  }
  const auto pts = positions(scene);
  // Points outside every block (possible only with min_points > 1) keep a
  // uniform distribution.
  for (Eigen::Index i = 0; i < n; ++i) {
    if (hits(i) > 0) {
      pred.p_sem.row(i) /= hits(i);
    } else {
      pred.p_sem.row(i).setConstant(1.0 / num_classes);
    }
  }
  if (cfg.use_msa) {
    pred.sem = msa::refine(pred.p_sem, maps, cfg.msa, pts).labels;
  } else {
    pred.sem = msa::argmax_rows(pred.p_sem);
  }
  pred.inst = merge::merge_blocks(pts, local, cfg.merge, pred.sem);
  pred.inst_sem = clustering::assign_cluster_semantics(pred.inst, pred.sem);
  return pred;
}

Scene prediction_scene(const Scene& scene, const Prediction& pred) {
  if (pred.sem.size() != scene.size() || pred.inst.size() != scene.size()) {
    throw Error("prediction does not match scene size");
  }
  Scene out = scene;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    out.points[i].sem = pred.sem[i];
    out.points[i].inst = pred.inst[i];
  }
  return out;
}

metrics::EvalReport evaluate(std::span<const Scene> scenes, std::span<const Prediction> preds,
                             int num_classes) {
  if (scenes.size() != preds.size()) throw Error("evaluate: scene/prediction count mismatch");
  metrics::Evaluator ev(num_classes);
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    ev.add(semantic_labels(scenes[s]), instance_labels(scenes[s]), preds[s].sem, preds[s].inst);
  }
  return ev.report();
}

}  // namespace saso::train
