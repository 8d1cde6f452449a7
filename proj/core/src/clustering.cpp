#include "saso/clustering.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "saso/error.hpp"

namespace saso::clustering {
namespace {

int num_clusters_of(std::span<const int> assignments) {
  int n = 0;
  for (int a : assignments) {
    if (a < 0) throw Error("cluster assignments must be non-negative");
    n = std::max(n, a + 1);
  }
  return n;
}

std::vector<int> per_cluster_mode(std::span<const int> assignments, std::span<const int> values) {
  if (assignments.size() != values.size()) throw Error("assignment/label length mismatch");
  const int n = num_clusters_of(assignments);
  std::vector<std::map<int, std::size_t>> hist(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    ++hist[static_cast<std::size_t>(assignments[i])][values[i]];
  }
  std::vector<int> out(static_cast<std::size_t>(n), -1);
  for (std::size_t c = 0; c < hist.size(); ++c) {
    std::size_t best = 0;
    // std::map iterates ascending, so strict '>' keeps the lowest value on ties.
    for (const auto& [v, cnt] : hist[c]) {
      if (cnt > best) {
        best = cnt;
        out[c] = v;
      }
    }
  }
  return out;
}

}  // namespace

int mode_of(std::span<const int> values) {
  if (values.empty()) throw Error("mode of an empty set");
  std::vector<int> zeros(values.size(), 0);
  return per_cluster_mode(zeros, values)[0];
}

ClusterResult mean_shift(const Matrix& emb, const MeanShiftConfig& cfg, std::uint64_t seed) {
  if (emb.rows() == 0) throw Error("mean_shift: no points");
  if (!(cfg.bandwidth > 0) || !(cfg.convergence_tol > 0) || !(cfg.merge_tol > 0)) {
    throw Error("mean_shift: bandwidth and tolerances must be positive");
  }
  const Eigen::Index n = emb.rows();
  const double bw2 = cfg.bandwidth * cfg.bandwidth;

  std::vector<Eigen::Index> seeds(static_cast<std::size_t>(n));
  std::iota(seeds.begin(), seeds.end(), Eigen::Index{0});
  if (cfg.max_seeds > 0 && seeds.size() > cfg.max_seeds) {
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k < cfg.max_seeds; ++k) {
      std::uniform_int_distribution<std::size_t> d(k, seeds.size() - 1);
      std::swap(seeds[k], seeds[d(rng)]);
    }
    seeds.resize(cfg.max_seeds);
    std::sort(seeds.begin(), seeds.end());
  }

  struct Mode {
    Eigen::RowVectorXd center;
    std::size_t population;
    std::size_t order;
  };
  std::vector<Mode> modes;
  modes.reserve(seeds.size());
  Eigen::VectorXd d2(n);
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    Eigen::RowVectorXd x = emb.row(seeds[s]);
    for (int it = 0; it < cfg.max_iters; ++it) {
      d2 = (emb.rowwise() - x).rowwise().squaredNorm();
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(emb.cols());
      std::size_t cnt = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (d2(i) <= bw2) {
          sum += emb.row(i);
          ++cnt;
        }
      }
      if (cnt == 0) break;
      Eigen::RowVectorXd next = sum / static_cast<double>(cnt);
      const double shift = (next - x).norm();
      x = next;
      if (shift < cfg.convergence_tol) break;
    }
    d2 = (emb.rowwise() - x).rowwise().squaredNorm();
    const auto pop = static_cast<std::size_t>((d2.array() <= bw2).count());
    modes.push_back({x, pop, s});
  }

  std::stable_sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
    if (a.population != b.population) return a.population > b.population;
    return a.order < b.order;
  });
  std::vector<Eigen::RowVectorXd> kept;
  const double merge2 = cfg.merge_tol * cfg.merge_tol;
  for (const auto& m : modes) {
    bool close = false;
    for (const auto& k : kept) {
      if ((k - m.center).squaredNorm() <= merge2) {
        close = true;
        break;
      }
    }
    if (!close) kept.push_back(m.center);
  }

  std::vector<int> nearest(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const auto diff = emb.row(i) - kept[k];
      const double d = cfg.l1_assignment ? diff.lpNorm<1>() : diff.squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(k);
      }
    }
    nearest[static_cast<std::size_t>(i)] = arg;
  }

  // Drop modes that attracted no points; keep survivor order.
  std::vector<int> remap(kept.size(), -1);
  for (int a : nearest) remap[static_cast<std::size_t>(a)] = 0;
  ClusterResult res;
  int next = 0;
  for (auto& r : remap) {
    if (r == 0) r = next++;
  }
  res.num_clusters = next;
  res.modes.resize(next, emb.cols());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (remap[k] >= 0) res.modes.row(remap[k]) = kept[k];
  }
  res.assignments.resize(nearest.size());
  for (std::size_t i = 0; i < nearest.size(); ++i) {
    res.assignments[i] = remap[static_cast<std::size_t>(nearest[i])];
  }
  return res;
}

std::vector<int> resolve_cluster_identity(std::span<const int> assignments,
                                          std::span<const int> gt_inst_labels) {
  return per_cluster_mode(assignments, gt_inst_labels);
}

std::vector<ClusterSplit> wrong_points(std::span<const int> assignments,
                                       std::span<const int> identities,
                                       std::span<const int> gt_inst_labels) {
  if (assignments.size() != gt_inst_labels.size()) throw Error("assignment/label length mismatch");
  std::vector<ClusterSplit> out(identities.size());
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const auto c = static_cast<std::size_t>(assignments[i]);
    if (c >= identities.size()) throw Error("assignment without an identity");
    if (gt_inst_labels[i] == identities[c]) {
      out[c].correct.push_back(i);
    } else {
      out[c].wrong.push_back(i);
    }
  }
  return out;
}

std::vector<int> assign_cluster_semantics(std::span<const int> assignments,
                                          std::span<const int> sem_predictions) {
  return per_cluster_mode(assignments, sem_predictions);
}

}  // namespace saso::clustering
