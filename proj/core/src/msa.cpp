#include "saso/msa.hpp"

#include <algorithm>
#include <cmath>

#include "saso/error.hpp"
#include "saso/log.hpp"

namespace saso::msa {

void MsaConfig::validate() const {
  if (scales.size() != weights.size()) throw Error("msa: scales and weights differ in length");
  for (double s : scales)
    if (!(s > 0)) throw Error("msa: scale radii must be positive");
  for (double w : weights)
    if (!(w >= 0)) throw Error("msa: weights must be non-negative");
}

std::vector<AssociationMap> build_maps(std::span<const Scene> scenes, int num_classes,
                                       const MsaConfig& cfg) {
  cfg.validate();
  if (num_classes <= 0) throw Error("msa: class count must be positive");
  const auto C = static_cast<Eigen::Index>(num_classes);
  std::vector<AssociationMap> maps;
  for (double s : cfg.scales) {
    Matrix sums = Matrix::Zero(C, C);
    std::vector<double> support(static_cast<std::size_t>(C), 0.0);
    Eigen::VectorXd counts(C);
    for (const auto& scene : scenes) {
      if (scene.empty()) continue;
      const auto pts = positions(scene);
      const GridIndex index(pts, s);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const int r = scene.points[i].sem;
        if (r < 0 || r >= num_classes) throw Error("msa: label out of range in " + scene.name);
        counts.setZero();
        double total = 0;
        index.for_each_in_ball(pts[i], s, [&](std::size_t j) {
          if (cfg.exclude_self && j == i) return;
          counts(scene.points[j].sem) += 1;
          total += 1;
        });
        if (total == 0) continue;
        if (cfg.pooled_counts) {
          sums.row(r) += counts.transpose();
        } else {
          sums.row(r) += counts.transpose() / total;
        }
        support[static_cast<std::size_t>(r)] += 1;
      }
    }
    AssociationMap m;
    m.scale = s;
    m.matrix = Matrix::Constant(C, C, 1.0 / static_cast<double>(C));
    m.support = support;
    m.absent.assign(static_cast<std::size_t>(C), true);
    for (Eigen::Index r = 0; r < C; ++r) {
      const double total = sums.row(r).sum();
      if (support[static_cast<std::size_t>(r)] > 0 && total > 0) {
        m.matrix.row(r) = sums.row(r) / total;
        m.absent[static_cast<std::size_t>(r)] = false;
      }
    }
    maps.push_back(std::move(m));
  }
  for (Eigen::Index r = 0; r < C; ++r) {
    if (!maps.empty() && maps.front().absent[static_cast<std::size_t>(r)]) {
      log::info("msa: class " + std::to_string(r) + " absent from training scenes; uniform row");
    }
  }
  return maps;
}

std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index arg = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, arg)) arg = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

Matrix onehot(std::span<const int> labels, int num_classes) {
  Matrix o = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) o(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return o;
}

Matrix onehot_predictions(const Matrix& p_sem) {
  return onehot(argmax_rows(p_sem), static_cast<int>(p_sem.cols()));
}

Matrix neighborhood_profile(const GridIndex& index, const Matrix& o_sem, double scale,
                            bool exclude_self) {
  if (static_cast<std::size_t>(o_sem.rows()) != index.size()) {
    throw Error("neighborhood_profile: index and predictions differ in size");
  }
  const Eigen::Index C = o_sem.cols();
  Matrix out = Matrix::Zero(o_sem.rows(), C);
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    double cnt = 0;
    index.for_each_in_ball(index.point(i), scale, [&](std::size_t j) {
      if (exclude_self && j == i) return;
      out.row(row) += o_sem.row(static_cast<Eigen::Index>(j));
      cnt += 1;
    });
    if (cnt > 0) {
      out.row(row) /= cnt;
    } else {
      out.row(row).setConstant(1.0 / static_cast<double>(C));
    }
  }
  return out;
}

RowVector surround_probability(const RowVector& p_corr, const AssociationMap& map,
                               Normalization norm) {
  if (p_corr.size() != map.matrix.cols()) throw Error("surround_probability: class count mismatch");
  const Eigen::Index C = map.matrix.rows();
  RowVector d(C);
  for (Eigen::Index r = 0; r < C; ++r) d(r) = (p_corr - map.matrix.row(r)).squaredNorm();
  RowVector sigma = RowVector::Zero(C);
  if (norm == Normalization::min_max) {
    const double lo = d.minCoeff(), hi = d.maxCoeff();
    if (hi > lo) sigma = (d.array() - lo) / (hi - lo);
  } else {
    const double total = d.sum();
    if (total > 0) sigma = d / total;
  }
  RowVector logits = RowVector::Ones(C) - sigma;
  logits = (logits.array() - logits.maxCoeff()).exp();
  return logits / logits.sum();
}

RefineResult refine(const Matrix& p_sem, std::span<const AssociationMap> maps,
                    const MsaConfig& cfg, std::span<const Vec3> points) {
  cfg.validate();
  if (maps.size() != cfg.scales.size()) throw Error("refine: map count differs from configured scales");
  if (static_cast<std::size_t>(p_sem.rows()) != points.size()) {
    throw Error("refine: probability rows differ from point count");
  }
  RefineResult res;
  res.scores = p_sem;
  if (points.empty()) return res;
  const Matrix o_sem = onehot_predictions(p_sem);
  const double cell = *std::max_element(cfg.scales.begin(), cfg.scales.end());
  const GridIndex index(points, cell);
  for (std::size_t k = 0; k < maps.size(); ++k) {
    if (maps[k].matrix.rows() != p_sem.cols()) throw Error("refine: map class count mismatch");
    if (cfg.weights[k] == 0) continue;
    const Matrix corr = neighborhood_profile(index, o_sem, maps[k].scale, cfg.exclude_self);
    for (Eigen::Index i = 0; i < corr.rows(); ++i) {
      res.scores.row(i) += cfg.weights[k] * surround_probability(corr.row(i), maps[k], cfg.normalization);
    }
  }
  res.labels = argmax_rows(res.scores);
  return res;
}

}  // namespace saso::msa
