#include "saso/losses.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "saso/clustering.hpp"
#include "saso/error.hpp"
#include "saso/log.hpp"

namespace saso::losses {
namespace {

double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

double hinge(double v) { return v > 0 ? v : 0.0; }

void check_rows(const Matrix& m, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(m.rows()) != n) {
    throw Error(std::string(what) + ": label count " + std::to_string(n) +
                " does not match row count " + std::to_string(m.rows()));
  }
}

}  // namespace

InstanceGroups instance_means(const Matrix& embeddings, std::span<const int> inst_labels) {
  check_rows(embeddings, inst_labels.size(), "instance_means");
  if (inst_labels.empty()) throw Error("instance_means: no points");
  InstanceGroups g;
  g.ids.assign(inst_labels.begin(), inst_labels.end());
  std::sort(g.ids.begin(), g.ids.end());
  g.ids.erase(std::unique(g.ids.begin(), g.ids.end()), g.ids.end());
  std::unordered_map<int, int> row;
  for (std::size_t i = 0; i < g.ids.size(); ++i) row[g.ids[i]] = static_cast<int>(i);

  g.counts.assign(g.ids.size(), 0);
  g.means = Matrix::Zero(static_cast<Eigen::Index>(g.ids.size()), embeddings.cols());
  g.row_of_point.resize(inst_labels.size());
  for (std::size_t j = 0; j < inst_labels.size(); ++j) {
    const int r = row[inst_labels[j]];
    g.row_of_point[j] = r;
    ++g.counts[static_cast<std::size_t>(r)];
    g.means.row(r) += embeddings.row(static_cast<Eigen::Index>(j));
  }
  for (std::size_t i = 0; i < g.ids.size(); ++i) {
    g.means.row(static_cast<Eigen::Index>(i)) /= static_cast<double>(g.counts[i]);
  }
  return g;
}

Matrix chain_means_to_points(const Matrix& dmeans, const InstanceGroups& groups) {
  Matrix out(static_cast<Eigen::Index>(groups.row_of_point.size()), dmeans.cols());
  for (std::size_t j = 0; j < groups.row_of_point.size(); ++j) {
    const int r = groups.row_of_point[j];
    out.row(static_cast<Eigen::Index>(j)) =
        dmeans.row(r) / static_cast<double>(groups.counts[static_cast<std::size_t>(r)]);
  }
  return out;
}

namespace {

// L_in given precomputed groups; gradient w.r.t. points (including the path
// through the means).
LossOutput l_in_impl(const Matrix& emb, const InstanceGroups& g, const InstanceLossConfig& cfg) {
  const auto I = static_cast<double>(g.ids.size());
  const Eigen::Index E = emb.cols();
  LossOutput out;
  out.gradient = Matrix::Zero(emb.rows(), E);
  Matrix dmeans = Matrix::Zero(g.means.rows(), E);
  for (Eigen::Index j = 0; j < emb.rows(); ++j) {
    const int r = g.row_of_point[static_cast<std::size_t>(j)];
    const double n = static_cast<double>(g.counts[static_cast<std::size_t>(r)]);
    const auto diff = (g.means.row(r) - emb.row(j)).eval();
    const double h = hinge(diff.lpNorm<1>() - cfg.zeta_v);
    if (h <= 0) continue;
    out.value += h * h / (I * n);
    const double coeff = 2.0 * h / (I * n);
    for (Eigen::Index e = 0; e < E; ++e) {
      const double gd = coeff * sgn(diff(e));
      dmeans(r, e) += gd;
      out.gradient(j, e) -= gd;
    }
  }
  out.gradient += chain_means_to_points(dmeans, g);
  out.terms["L_in"] = out.value;
  return out;
}

}  // namespace

LossOutput l_in(const Matrix& embeddings, std::span<const int> inst_labels,
                const InstanceLossConfig& cfg) {
  return l_in_impl(embeddings, instance_means(embeddings, inst_labels), cfg);
}

LossOutput l_out(const Matrix& means, const InstanceLossConfig& cfg) {
  const Eigen::Index I = means.rows();
  LossOutput out;
  out.gradient = Matrix::Zero(I, means.cols());
  out.terms["L_out"] = 0;
  if (I < 2) return out;
  const double norm = 1.0 / static_cast<double>(I * (I - 1));
  for (Eigen::Index a = 0; a < I; ++a) {
    for (Eigen::Index b = 0; b < I; ++b) {
      if (a == b) continue;
      const auto diff = (means.row(a) - means.row(b)).eval();
      const double h = hinge(2.0 * cfg.zeta_d - diff.lpNorm<1>());
      if (h <= 0) continue;
      out.value += norm * h * h;
      for (Eigen::Index e = 0; e < means.cols(); ++e) {
        const double gd = norm * 2.0 * h * sgn(diff(e));
        out.gradient(a, e) -= gd;
        out.gradient(b, e) += gd;
      }
    }
  }
  out.terms["L_out"] = out.value;
  return out;
}

LossOutput l_reg(const Matrix& means) {
  LossOutput out;
  const auto I = static_cast<double>(means.rows());
  out.gradient = Matrix::Zero(means.rows(), means.cols());
  if (means.rows() == 0) {
    out.terms["L_reg"] = 0;
    return out;
  }
  out.value = means.cwiseAbs().sum() / I;
  out.gradient = means.unaryExpr([](double v) { return sgn(v); }) / I;
  out.terms["L_reg"] = out.value;
  return out;
}

LossOutput l_base(const Matrix& embeddings, std::span<const int> inst_labels,
                  const InstanceLossConfig& cfg) {
  const InstanceGroups g = instance_means(embeddings, inst_labels);
  LossOutput in = l_in_impl(embeddings, g, cfg);
  LossOutput outp = l_out(g.means, cfg);
  LossOutput reg = l_reg(g.means);

  LossOutput total;
  total.value = in.value + outp.value + cfg.lambda_reg * reg.value;
  total.gradient = in.gradient +
                   chain_means_to_points(outp.gradient + cfg.lambda_reg * reg.gradient, g);
  total.terms["L_in"] = in.value;
  total.terms["L_out"] = outp.value;
  total.terms["L_reg"] = reg.value;
  return total;
}

LossOutput l_cluster(const Matrix& embeddings, std::span<const int> assignments,
                     std::span<const int> inst_labels, const InstanceLossConfig& cfg) {
  check_rows(embeddings, inst_labels.size(), "l_cluster");
  check_rows(embeddings, assignments.size(), "l_cluster");
  LossOutput out;
  out.gradient = Matrix::Zero(embeddings.rows(), embeddings.cols());
  out.terms["L_cluster"] = 0;
  if (assignments.empty()) return out;

  const auto identity = clustering::resolve_cluster_identity(assignments, inst_labels);
  const auto split = clustering::wrong_points(assignments, identity, inst_labels);

  std::size_t nc = 0;
  struct Contribution {
    std::size_t cluster;
    double value;
  };
  for (std::size_t c = 0; c < split.size(); ++c) {
    const auto& part = split[c];
    if (part.wrong.empty() && part.correct.empty()) continue;
    if (cfg.cluster_impure_only && part.wrong.empty()) continue;
    if (part.correct.empty()) {
      log::warn("l_cluster: cluster " + std::to_string(c) + " has no correctly assigned points; skipped");
      continue;
    }
    ++nc;
  }
  if (nc == 0) return out;

  const double inv_nc = 1.0 / static_cast<double>(nc);
  for (const auto& part : split) {
    if (part.wrong.empty() || part.correct.empty()) continue;
    Eigen::RowVectorXd center = Eigen::RowVectorXd::Zero(embeddings.cols());
    for (auto j : part.correct) center += embeddings.row(static_cast<Eigen::Index>(j));
    center /= static_cast<double>(part.correct.size());

    const double scale = inv_nc / static_cast<double>(part.wrong.size());
    Eigen::RowVectorXd dcenter = Eigen::RowVectorXd::Zero(embeddings.cols());
    for (auto j : part.wrong) {
      const auto row = static_cast<Eigen::Index>(j);
      const auto diff = (embeddings.row(row) - center).eval();
      const double h = hinge(2.0 * cfg.zeta_d - diff.lpNorm<1>());
      if (h <= 0) continue;
      out.value += scale * h * h;
      for (Eigen::Index e = 0; e < embeddings.cols(); ++e) {
        const double gd = scale * 2.0 * h * sgn(diff(e));
        out.gradient(row, e) -= gd;
        dcenter(e) += gd;
      }
    }
    dcenter /= static_cast<double>(part.correct.size());
    for (auto j : part.correct) out.gradient.row(static_cast<Eigen::Index>(j)) += dcenter;
  }
  out.terms["L_cluster"] = out.value;
  return out;
}

LossOutput l_ins(const Matrix& embeddings, std::span<const int> inst_labels,
                 std::span<const int> assignments, const InstanceLossConfig& cfg) {
  LossOutput base = l_base(embeddings, inst_labels, cfg);
  LossOutput cl = l_cluster(embeddings, assignments, inst_labels, cfg);
  base.value += cl.value;
  base.gradient += cl.gradient;
  base.terms["L_cluster"] = cl.value;
  return base;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double mx = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - mx).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

LossOutput cross_entropy(const Matrix& logits, std::span<const int> sem_labels) {
  check_rows(logits, sem_labels.size(), "cross_entropy");
  LossOutput out;
  const Eigen::Index n = logits.rows();
  out.gradient = Matrix::Zero(n, logits.cols());
  out.terms["L_sem"] = 0;
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = sem_labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols()) throw Error("cross_entropy: label out of range");
    const double mx = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd ex = (logits.row(i).array() - mx).exp();
    const double z = ex.sum();
    out.value += (std::log(z) + mx - logits(i, y)) * inv_n;
    out.gradient.row(i) = ex / z * inv_n;
    out.gradient(i, y) -= inv_n;
  }
  out.terms["L_sem"] = out.value;
  return out;
}

}  // namespace saso::losses
