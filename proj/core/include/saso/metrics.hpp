#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace saso::metrics {

// Sorted point indices of one instance.
using Region = std::vector<std::size_t>;

struct LabeledRegion {
  Region points;
  int cls = 0;
};

double iou(const Region& a, const Region& b);

struct Coverage {
  double cov = 0;
  double wcov = 0;
  std::vector<double> best_iou;  // per gt region
  std::vector<int> best_pred;    // per gt region, -1 when nothing overlaps
};

// Regions within each list must be disjoint. Throws Error if gt is empty.
Coverage coverage(std::span<const Region> gt, std::span<const Region> pred);

struct Match {
  std::size_t gt = 0;
  std::size_t pred = 0;
  double iou = 0;
};

struct PrecRecall {
  std::vector<std::size_t> tp, num_pred, num_gt;  // per class
  std::vector<double> precision, recall;          // per class (0 where undefined)
  double m_prec = 0, m_rec = 0;                   // over classes present in gt
  std::vector<Match> matches;
};

// Greedy one-to-one matching per class in descending IoU; a match is a true
// positive when IoU >= threshold and the classes agree.
PrecRecall prec_recall(std::span<const LabeledRegion> gt, std::span<const LabeledRegion> pred,
                       int num_classes, double iou_threshold = 0.5);

struct SemanticReport {
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> confusion;  // rows gt, cols pred
  std::vector<double> class_iou, class_acc;
  std::vector<bool> present;  // class occurs in gt
  double oacc = 0, macc = 0, miou = 0;
};

SemanticReport semantic_scores(std::span<const int> pred, std::span<const int> gt, int num_classes);
SemanticReport semantic_from_confusion(
    const Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>& confusion);

// Regions of a per-point instance labeling, ordered by instance id. The
// region class is the majority semantic label of its points.
std::vector<LabeledRegion> regions_from_labels(std::span<const int> inst, std::span<const int> sem);

struct InstanceReport {
  std::vector<double> cov, wcov, precision, recall;  // per class
  std::vector<std::size_t> gt_count;                 // gt instances per class
  double m_cov = 0, m_wcov = 0, m_prec = 0, m_rec = 0;
};

struct EvalReport {
  InstanceReport instance;
  SemanticReport semantic;
  std::size_t scenes = 0;
  std::size_t points = 0;
};

// Pooled evaluation over scenes: per-class coverage averages every gt
// instance of the class across scenes, prec/recall pool TP and counts, and the
// confusion matrices are summed.
class Evaluator {
 public:
  explicit Evaluator(int num_classes, double iou_threshold = 0.5);

  void add(std::span<const int> gt_sem, std::span<const int> gt_inst, std::span<const int> pred_sem,
           std::span<const int> pred_inst);
  EvalReport report() const;

 private:
  int num_classes_;
  double threshold_;
  std::vector<std::vector<double>> gt_best_iou_;   // per class
  std::vector<std::vector<double>> gt_size_;       // per class
  std::vector<std::size_t> tp_, num_pred_, num_gt_;
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> confusion_;
  std::size_t scenes_ = 0, points_ = 0;
};

// Mean-of-scene aggregation of per-scene reports: scalar means are averaged
// over scenes, per-class values over the scenes where the class occurs in gt,
// and confusion matrices are summed. Throws Error on an empty list.
EvalReport average_reports(std::span<const EvalReport> reports);

// Keys: mCov, mWCov, mPrec, mRec, mAcc, mIoU, oAcc, plus per-class detail.
std::string report_to_json(const EvalReport& report, std::span<const std::string> class_names = {});

}  // namespace saso::metrics
