#include "saso/metrics.hpp"

#include <algorithm>
#include <map>
#include <tuple>
#include <unordered_map>

#include "saso/clustering.hpp"
#include "saso/error.hpp"

namespace saso::metrics {
namespace {

// Intersection counts of every gt region against the pred regions.
std::vector<std::unordered_map<std::size_t, std::size_t>> intersections(
    std::span<const Region> gt, std::span<const Region> pred) {
  std::unordered_map<std::size_t, std::size_t> owner;
  for (std::size_t p = 0; p < pred.size(); ++p)
    for (auto i : pred[p]) owner[i] = p;
  std::vector<std::unordered_map<std::size_t, std::size_t>> out(gt.size());
  for (std::size_t g = 0; g < gt.size(); ++g)
    for (auto i : gt[g]) {
      auto it = owner.find(i);
      if (it != owner.end()) ++out[g][it->second];
    }
  return out;
}

double iou_from(std::size_t inter, std::size_t a, std::size_t b) {
  const std::size_t uni = a + b - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double mean_over_present(const std::vector<double>& v, const std::vector<bool>& present) {
  double s = 0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < v.size(); ++c)
    if (present[c]) {
      s += v[c];
      ++n;
    }
  return n ? s / static_cast<double>(n) : 0.0;
}

struct PairCandidate {
  double iou;
  std::size_t g, p;
};

// Greedy matching in descending IoU (ties: gt index, then pred index).
std::vector<Match> greedy_match(std::vector<PairCandidate> cands) {
  std::sort(cands.begin(), cands.end(), [](const PairCandidate& a, const PairCandidate& b) {
    return std::tie(b.iou, a.g, a.p) < std::tie(a.iou, b.g, b.p);
  });
  std::vector<Match> out;
  std::unordered_map<std::size_t, bool> gt_used, pred_used;
  for (const auto& c : cands) {
    if (gt_used[c.g] || pred_used[c.p]) continue;
    gt_used[c.g] = pred_used[c.p] = true;
    out.push_back({c.g, c.p, c.iou});
  }
  return out;
}

}  // namespace

double iou(const Region& a, const Region& b) {
  std::size_t inter = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  return iou_from(inter, a.size(), b.size());
}

Coverage coverage(std::span<const Region> gt, std::span<const Region> pred) {
  if (gt.empty()) throw Error("coverage undefined without ground-truth regions");
  Coverage out;
  out.best_iou.assign(gt.size(), 0.0);
  out.best_pred.assign(gt.size(), -1);
  const auto inter = intersections(gt, pred);
  double total = 0;
  for (const auto& g : gt) total += static_cast<double>(g.size());
  for (std::size_t g = 0; g < gt.size(); ++g) {
    for (const auto& [p, n] : inter[g]) {
      const double v = iou_from(n, gt[g].size(), pred[p].size());
      if (v > out.best_iou[g] || (v == out.best_iou[g] && out.best_pred[g] >= 0 &&
                                  static_cast<int>(p) < out.best_pred[g])) {
        out.best_iou[g] = v;
        out.best_pred[g] = static_cast<int>(p);
      }
    }
    out.cov += out.best_iou[g] / static_cast<double>(gt.size());
    if (total > 0) out.wcov += static_cast<double>(gt[g].size()) / total * out.best_iou[g];
  }
  return out;
}

PrecRecall prec_recall(std::span<const LabeledRegion> gt, std::span<const LabeledRegion> pred,
                       int num_classes, double iou_threshold) {
  const auto C = static_cast<std::size_t>(num_classes);
  PrecRecall out;
  out.tp.assign(C, 0);
  out.num_pred.assign(C, 0);
  out.num_gt.assign(C, 0);
  out.precision.assign(C, 0.0);
  out.recall.assign(C, 0.0);
  for (const auto& g : gt) ++out.num_gt.at(static_cast<std::size_t>(g.cls));
  for (const auto& p : pred) ++out.num_pred.at(static_cast<std::size_t>(p.cls));

  std::vector<Region> gr, pr;
  for (const auto& g : gt) gr.push_back(g.points);
  for (const auto& p : pred) pr.push_back(p.points);
  const auto inter = intersections(gr, pr);
  std::vector<PairCandidate> cands;
  for (std::size_t g = 0; g < gt.size(); ++g)
    for (const auto& [p, n] : inter[g]) {
      if (gt[g].cls != pred[p].cls) continue;
      const double v = iou_from(n, gr[g].size(), pr[p].size());
      if (v >= iou_threshold) cands.push_back({v, g, p});
    }
  out.matches = greedy_match(std::move(cands));
  for (const auto& m : out.matches) ++out.tp[static_cast<std::size_t>(gt[m.gt].cls)];

  std::vector<bool> present(C);
  for (std::size_t c = 0; c < C; ++c) {
    present[c] = out.num_gt[c] > 0;
    if (out.num_pred[c] > 0) out.precision[c] = static_cast<double>(out.tp[c]) / static_cast<double>(out.num_pred[c]);
    if (out.num_gt[c] > 0) out.recall[c] = static_cast<double>(out.tp[c]) / static_cast<double>(out.num_gt[c]);
  }
  out.m_prec = mean_over_present(out.precision, present);
  out.m_rec = mean_over_present(out.recall, present);
  return out;
}

SemanticReport semantic_from_confusion(
    const Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>& confusion) {
  SemanticReport r;
  r.confusion = confusion;
  const auto C = static_cast<std::size_t>(confusion.rows());
  r.class_iou.assign(C, 0.0);
  r.class_acc.assign(C, 0.0);
  r.present.assign(C, false);
  const long long total = confusion.sum();
  long long diag = 0;
  for (std::size_t c = 0; c < C; ++c) {
    const auto k = static_cast<Eigen::Index>(c);
    const long long tp = confusion(k, k);
    const long long gt_n = confusion.row(k).sum();
    const long long pred_n = confusion.col(k).sum();
    diag += tp;
    r.present[c] = gt_n > 0;
    if (gt_n > 0) r.class_acc[c] = static_cast<double>(tp) / static_cast<double>(gt_n);
    const long long uni = gt_n + pred_n - tp;
    if (uni > 0) r.class_iou[c] = static_cast<double>(tp) / static_cast<double>(uni);
  }
  r.oacc = total > 0 ? static_cast<double>(diag) / static_cast<double>(total) : 0.0;
  r.macc = mean_over_present(r.class_acc, r.present);
  r.miou = mean_over_present(r.class_iou, r.present);
  return r;
}

SemanticReport semantic_scores(std::span<const int> pred, std::span<const int> gt, int num_classes) {
  if (pred.size() != gt.size()) throw Error("semantic_scores: length mismatch");
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> conf =
      Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>::Zero(num_classes, num_classes);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] < 0 || gt[i] >= num_classes || pred[i] < 0 || pred[i] >= num_classes) {
      throw Error("semantic_scores: label out of range");
    }
    ++conf(gt[i], pred[i]);
  }
  return semantic_from_confusion(conf);
}

std::vector<LabeledRegion> regions_from_labels(std::span<const int> inst, std::span<const int> sem) {
  if (inst.size() != sem.size()) throw Error("regions_from_labels: length mismatch");
  std::map<int, std::size_t> slot;
  std::vector<LabeledRegion> out;
  std::vector<std::vector<int>> classes;
  for (std::size_t i = 0; i < inst.size(); ++i) slot.emplace(inst[i], 0);
  std::size_t k = 0;
  for (auto& [id, s] : slot) s = k++;
  out.resize(slot.size());
  classes.resize(slot.size());
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const auto s = slot[inst[i]];
    out[s].points.push_back(i);
    classes[s].push_back(sem[i]);
  }
  for (std::size_t s = 0; s < out.size(); ++s) out[s].cls = clustering::mode_of(classes[s]);
  return out;
}

Evaluator::Evaluator(int num_classes, double iou_threshold)
    : num_classes_(num_classes), threshold_(iou_threshold) {
  if (num_classes <= 0) throw Error("evaluator: class count must be positive");
  const auto C = static_cast<std::size_t>(num_classes);
  gt_best_iou_.resize(C);
  gt_size_.resize(C);
  tp_.assign(C, 0);
  num_pred_.assign(C, 0);
  num_gt_.assign(C, 0);
  confusion_ = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>::Zero(num_classes, num_classes);
}

void Evaluator::add(std::span<const int> gt_sem, std::span<const int> gt_inst,
                    std::span<const int> pred_sem, std::span<const int> pred_inst) {
  if (gt_sem.size() != gt_inst.size() || gt_sem.size() != pred_sem.size() ||
      gt_sem.size() != pred_inst.size()) {
    throw Error("evaluator: label arrays differ in length");
  }
  ++scenes_;
  points_ += gt_sem.size();
  const auto sem = semantic_scores(pred_sem, gt_sem, num_classes_);
  confusion_ += sem.confusion;
  if (gt_sem.empty()) return;

  const auto gt = regions_from_labels(gt_inst, gt_sem);
  const auto pred = regions_from_labels(pred_inst, pred_sem);
  for (std::size_t c = 0; c < static_cast<std::size_t>(num_classes_); ++c) {
    std::vector<Region> g, p;
    for (const auto& r : gt)
      if (static_cast<std::size_t>(r.cls) == c) g.push_back(r.points);
    for (const auto& r : pred)
      if (static_cast<std::size_t>(r.cls) == c) p.push_back(r.points);
    if (g.empty()) continue;
    const auto cov = coverage(g, p);
    for (std::size_t k = 0; k < g.size(); ++k) {
      gt_best_iou_[c].push_back(cov.best_iou[k]);
      gt_size_[c].push_back(static_cast<double>(g[k].size()));
    }
  }
  const auto pr = prec_recall(gt, pred, num_classes_, threshold_);
  for (std::size_t c = 0; c < tp_.size(); ++c) {
    tp_[c] += pr.tp[c];
    num_pred_[c] += pr.num_pred[c];
    num_gt_[c] += pr.num_gt[c];
  }
}

EvalReport Evaluator::report() const {
  EvalReport r;
  r.scenes = scenes_;
  r.points = points_;
  r.semantic = semantic_from_confusion(confusion_);
  const auto C = static_cast<std::size_t>(num_classes_);
  auto& ins = r.instance;
  ins.cov.assign(C, 0.0);
  ins.wcov.assign(C, 0.0);
  ins.precision.assign(C, 0.0);
  ins.recall.assign(C, 0.0);
  ins.gt_count = num_gt_;
  std::vector<bool> present(C, false);
  for (std::size_t c = 0; c < C; ++c) {
    present[c] = num_gt_[c] > 0;
    const auto& best = gt_best_iou_[c];
    double total = 0;
    for (double s : gt_size_[c]) total += s;
    for (std::size_t k = 0; k < best.size(); ++k) {
      ins.cov[c] += best[k] / static_cast<double>(best.size());
      ins.wcov[c] += gt_size_[c][k] / total * best[k];
    }
    if (num_pred_[c] > 0) ins.precision[c] = static_cast<double>(tp_[c]) / static_cast<double>(num_pred_[c]);
    if (num_gt_[c] > 0) ins.recall[c] = static_cast<double>(tp_[c]) / static_cast<double>(num_gt_[c]);
  }
  ins.m_cov = mean_over_present(ins.cov, present);
  ins.m_wcov = mean_over_present(ins.wcov, present);
  ins.m_prec = mean_over_present(ins.precision, present);
  ins.m_rec = mean_over_present(ins.recall, present);
  return r;
}

EvalReport average_reports(std::span<const EvalReport> reports) {
  if (reports.empty()) throw Error("average_reports: no reports");
  const auto C = reports.front().semantic.class_iou.size();
  EvalReport out;
  auto& ins = out.instance;
  auto& sem = out.semantic;
  ins.cov.assign(C, 0.0);
  ins.wcov.assign(C, 0.0);
  ins.precision.assign(C, 0.0);
  ins.recall.assign(C, 0.0);
  ins.gt_count.assign(C, 0);
  sem.class_iou.assign(C, 0.0);
  sem.class_acc.assign(C, 0.0);
  sem.present.assign(C, false);
  sem.confusion = reports.front().semantic.confusion;
  sem.confusion.setZero();
  std::vector<double> inst_n(C, 0.0), sem_n(C, 0.0);
  const double n = static_cast<double>(reports.size());
  for (const auto& r : reports) {
    if (r.semantic.class_iou.size() != C) throw Error("average_reports: class counts differ");
    out.scenes += r.scenes;
    out.points += r.points;
    sem.confusion += r.semantic.confusion;
    for (std::size_t c = 0; c < C; ++c) {
      ins.gt_count[c] += r.instance.gt_count[c];
      if (r.instance.gt_count[c] > 0) {
        ins.cov[c] += r.instance.cov[c];
        ins.wcov[c] += r.instance.wcov[c];
        ins.precision[c] += r.instance.precision[c];
        ins.recall[c] += r.instance.recall[c];
        inst_n[c] += 1;
      }
      if (r.semantic.present[c]) {
        sem.class_iou[c] += r.semantic.class_iou[c];
        sem.class_acc[c] += r.semantic.class_acc[c];
        sem.present[c] = true;
        sem_n[c] += 1;
      }
    }
    ins.m_cov += r.instance.m_cov / n;
    ins.m_wcov += r.instance.m_wcov / n;
    ins.m_prec += r.instance.m_prec / n;
    ins.m_rec += r.instance.m_rec / n;
    sem.oacc += r.semantic.oacc / n;
    sem.macc += r.semantic.macc / n;
    sem.miou += r.semantic.miou / n;
  }
  for (std::size_t c = 0; c < C; ++c) {
    if (inst_n[c] > 0) {
      ins.cov[c] /= inst_n[c];
      ins.wcov[c] /= inst_n[c];
      ins.precision[c] /= inst_n[c];
      ins.recall[c] /= inst_n[c];
    }
    if (sem_n[c] > 0) {
      sem.class_iou[c] /= sem_n[c];
      sem.class_acc[c] /= sem_n[c];
    }
  }
  return out;
}

}  // namespace saso::metrics
