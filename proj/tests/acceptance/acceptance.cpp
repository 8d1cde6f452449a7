// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. `saso_acceptance N...` runs only the listed
// criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "saso/clustering.hpp"
#include "saso/losses.hpp"
#include "saso/metrics.hpp"
#include "saso/msa.hpp"
#include "saso/net.hpp"
#include "saso/trainer.hpp"
#include "saso/wfs.hpp"
#include "suites.hpp"

namespace {

using namespace saso;
using Matrix = Eigen::MatrixXd;
using Clock = std::chrono::steady_clock;

// Pinned tolerances and gates.
constexpr double kGradRelTol = 1e-4;
constexpr double kGradAbsFloor = 1e-8;
constexpr double kKinkMargin = 1e-3;  // draws closer than this to a hinge or |.| kink are redrawn
constexpr int kGradDraws = 20;
constexpr double kGradSeconds = 30;

constexpr double kHandTol = 1e-9;

constexpr int kWfsVectors = 1000;
constexpr double kWfsSeconds = 10;

constexpr int kMixtures = 50;
constexpr double kBandwidth = 0.6;

constexpr int kPartitions = 200;
constexpr double kMetricTol = 1e-12;  // float summation order only

constexpr double kBaselineWcov = 0.80;
constexpr double kSpcoGain = 0.02;
constexpr double kMsaGain = 0.02;
constexpr double kWfsGain = 0.05;
constexpr double kSuiteSeconds = 15 * 60;
constexpr int kBaselineEpochs = 8;
constexpr int kAdjacentEpochs = 12;
constexpr int kSpcoStartEpoch = 6;
constexpr int kNoisyEpochs = 8;
constexpr int kImbalancedEpochs = 8;

constexpr std::uint64_t kFlipSeed = 5;
constexpr std::size_t kFlipGoldenErrors = 4;  // recorded from the oracle run

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> d(0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

std::vector<int> random_labels(std::size_t n, int k, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, k - 1);
  std::vector<int> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i < static_cast<std::size_t>(k) ? static_cast<int>(i) : d(rng);
  return v;
}

Outcome gradients() {
  const auto t0 = Clock::now();
  const losses::InstanceLossConfig cfg;
  std::mt19937_64 rng(101);
  double worst = 0;
  std::string worst_name = "none";
  int checked = 0;
  auto check = [&](const char* name, const std::function<double(const Matrix&)>& f, const Matrix& x,
                   const Matrix& grad) {
    const double e = oracle::fd_max_rel_error(f, x, grad, 1e-6, kGradAbsFloor);
    if (!(e <= worst)) {
      worst = e;
      worst_name = name;
    }
    ++checked;
  };
  // Embedding-space losses on point embeddings.
  for (int n = 0; n < kGradDraws;) {
    const Matrix e = random_matrix(14, 5, rng, 0.7);
    const auto inst = random_labels(14, 3, rng);
    const auto assign = random_labels(14, 3, rng);
    const auto g = losses::instance_means(e, inst);
    if (oracle::l_in_kink_distance(e, inst, cfg.zeta_v) < kKinkMargin ||
        oracle::l_out_kink_distance(g.means, cfg.zeta_d) < kKinkMargin ||
        oracle::l_cluster_kink_distance(e, assign, inst, cfg.zeta_d) < kKinkMargin ||
        g.means.cwiseAbs().minCoeff() < kKinkMargin) {
      continue;
    }
    ++n;
    check("L_in", [&](const Matrix& x) { return losses::l_in(x, inst, cfg).value; }, e,
          losses::l_in(e, inst, cfg).gradient);
    check("L_base", [&](const Matrix& x) { return losses::l_base(x, inst, cfg).value; }, e,
          losses::l_base(e, inst, cfg).gradient);
    check("L_cluster", [&](const Matrix& x) { return losses::l_cluster(x, assign, inst, cfg).value; }, e,
          losses::l_cluster(e, assign, inst, cfg).gradient);
    check("L_ins", [&](const Matrix& x) { return losses::l_ins(x, inst, assign, cfg).value; }, e,
          losses::l_ins(e, inst, assign, cfg).gradient);
  }
  // Mean-space losses.
  for (int n = 0; n < kGradDraws;) {
    const Matrix m = random_matrix(4, 5, rng, 0.7);
    if (oracle::l_out_kink_distance(m, cfg.zeta_d) < kKinkMargin || m.cwiseAbs().minCoeff() < kKinkMargin) continue;
    ++n;
    check("L_out", [&](const Matrix& x) { return losses::l_out(x, cfg).value; }, m, losses::l_out(m, cfg).gradient);
    check("L_reg", [&](const Matrix& x) { return losses::l_reg(x).value; }, m, losses::l_reg(m).gradient);
  }
  for (int n = 0; n < kGradDraws; ++n) {
    const Matrix logits = random_matrix(10, 8, rng, 1.5);
    const auto sem = random_labels(10, 8, rng);
    check("cross-entropy", [&](const Matrix& x) { return losses::cross_entropy(x, sem).value; }, logits,
          losses::cross_entropy(logits, sem).gradient);
  }
  const double secs = seconds_since(t0);
  return {worst < kGradRelTol && secs < kGradSeconds && checked == 7 * kGradDraws,
          fmt("%d checks, worst rel err above the abs floor %.2e (%s), %.1f s", checked, worst, worst_name.c_str(), secs)};
}

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

Outcome hand_values() {
  const losses::InstanceLossConfig cfg;
  const std::vector<int> pair = {0, 0};
  const double l_in = losses::l_in(col({0.0, 2.0}), pair, cfg).value;
  const double l_out = losses::l_out(col({0.0, 1.0}), cfg).value;
  const double l_reg = losses::l_reg(col({0.5, -1.5})).value;
  const std::vector<int> assign = {0, 0, 0}, inst = {5, 5, 9};
  const double l_cluster = losses::l_cluster(col({0.0, 0.0, 1.0}), assign, inst, cfg).value;
  // Ground truth {1,2,3,4} and {5,6} against predictions {1,2,3} and
  // {4,5,6,7}: IoUs 0.75 and 0.5.
  const std::vector<metrics::Region> gt = {{1, 2, 3, 4}, {5, 6}};
  const std::vector<metrics::Region> pred = {{1, 2, 3}, {4, 5, 6, 7}};
  const auto c = metrics::coverage(gt, pred);
  const bool ok = std::abs(l_in - 0.25) < kHandTol && std::abs(l_out - 4.0) < kHandTol &&
                  std::abs(l_reg - 1.0) < kHandTol && std::abs(l_cluster - 4.0) < kHandTol &&
                  std::abs(c.cov - 0.625) < kHandTol && std::abs(c.wcov - 2.0 / 3.0) < kHandTol;
  return {ok, fmt("L_in %.12g, L_out %.12g, L_reg %.12g, L_cluster %.12g, Cov %.12g, WCov %.12g", l_in, l_out,
                  l_reg, l_cluster, c.cov, c.wcov)};
}

Outcome water_filling() {
  const auto t0 = Clock::now();
  const std::vector<double> op = {0.5, 0.3, 0.2};
  const auto hand = wfs::water_fill(op, 0.1);
  bool ok = hand.sp.size() == 3;
  const std::vector<double> expect = {0.2, 0.4, 0.4};
  for (std::size_t c = 0; ok && c < 3; ++c) ok = std::abs(hand.sp[c] - expect[c]) < 1e-12;
  const bool hand_ok = ok;

  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> nc(1, 13);
  std::uniform_real_distribution<double> u(0, 1);
  std::size_t violations = 0, runs = 0;
  for (double delta : {1e-2, 1e-3, 1e-4}) {
    // 1/delta is not exact in binary; the guard keeps ceil from stepping past it.
    const auto expected_iters = static_cast<std::size_t>(std::ceil(1.0 / delta - 1e-9));
    for (int t = 0; t < kWfsVectors; ++t) {
      std::vector<double> p(static_cast<std::size_t>(nc(rng)));
      for (auto& v : p) v = u(rng) < 0.2 ? 0.0 : u(rng);
      if (std::accumulate(p.begin(), p.end(), 0.0) == 0) p[0] = 1;
      const double s = std::accumulate(p.begin(), p.end(), 0.0);
      for (auto& v : p) v /= s;
      const auto r = wfs::water_fill(p, delta);
      ++runs;
      bool good = r.iterations == expected_iters;
      const double total = std::accumulate(r.sp.begin(), r.sp.end(), 0.0);
      good = good && total >= 1.0 - 1e-9 && total < 1.0 + delta;
      double max_filled = -1;
      for (std::size_t c = 0; c < p.size(); ++c)
        if (r.steps[c] > 0) max_filled = std::max(max_filled, r.op_filled[c]);
      for (std::size_t i = 0; good && i < p.size(); ++i) {
        // Water level: every raised category ends within delta of the others,
        // and untouched ones already sat above the level.
        for (std::size_t j = 0; j < p.size(); ++j) {
          if (r.steps[i] > 0 && r.steps[j] > 0 && std::abs(r.op_filled[i] - r.op_filled[j]) > delta + 1e-9) good = false;
          if (p[i] < p[j] && r.sp[i] < r.sp[j]) good = false;
        }
        if (r.steps[i] == 0 && p[i] < max_filled - delta - 1e-9) good = false;
      }
      violations += good ? 0 : 1;
    }
  }
  const double secs = seconds_since(t0);
  return {hand_ok && violations == 0 && secs < kWfsSeconds,
          fmt("hand SP [%.3g, %.3g, %.3g], %zu/%zu random fills violate, %.1f s", hand.sp[0], hand.sp[1], hand.sp[2],
              violations, runs, secs)};
}

Outcome mean_shift() {
  std::mt19937_64 rng(404);
  clustering::MeanShiftConfig cfg;
  cfg.bandwidth = kBandwidth;
  cfg.merge_tol = kBandwidth / 2;
  int wrong_count = 0, imperfect = 0;
  for (int t = 0; t < kMixtures; ++t) {
    const int k = 2 + static_cast<int>(rng() % 5);
    const auto m = oracle::gaussian_mixture(k, 5, 30, 4 * kBandwidth + 0.1, kBandwidth / 4, rng);
    const auto r = clustering::mean_shift(m.points, cfg, static_cast<std::uint64_t>(t));
    wrong_count += r.num_clusters != k;
    imperfect += oracle::partition_agreement(r.assignments, m.labels) != 1.0;
  }
  return {wrong_count == 0 && imperfect == 0,
          fmt("%d mixtures, %d wrong cluster counts, %d imperfect assignments", kMixtures, wrong_count, imperfect)};
}

Outcome metric_oracles() {
  std::mt19937_64 rng(505);
  int mismatches = 0, compared = 0;
  for (int t = 0; t < kPartitions; ++t) {
    const std::size_t n = 10 + rng() % 40;
    const auto gr = oracle::random_partition(n, 1 + rng() % 12, 0.15, rng);
    const auto prr = oracle::random_partition(n, 1 + rng() % 12, 0.15, rng);
    if (gr.empty()) continue;
    ++compared;
    const auto c = metrics::coverage(gr, prr);
    const auto [cov, wcov] = oracle::coverage(gr, prr);
    std::vector<metrics::LabeledRegion> g, p;
    std::vector<int> gc, pc;
    for (const auto& r : gr) {
      gc.push_back(static_cast<int>(rng() % 3));
      g.push_back({r, gc.back()});
    }
    for (const auto& r : prr) {
      pc.push_back(static_cast<int>(rng() % 3));
      p.push_back({r, pc.back()});
    }
    const auto pr = metrics::prec_recall(g, p, 3);
    const std::size_t tp = std::accumulate(pr.tp.begin(), pr.tp.end(), std::size_t{0});
    if (std::abs(c.cov - cov) > kMetricTol || std::abs(c.wcov - wcov) > kMetricTol ||
        tp != oracle::max_matching(gr, gc, prr, pc, 0.5)) {
      ++mismatches;
    }
  }
  return {mismatches == 0 && compared > 0, fmt("%d partitions compared, %d mismatches", compared, mismatches)};
}

metrics::EvalReport run_eval(const suite::Suite& s, const net::NetParams& params, const train::InferConfig& ic,
                             std::span<const msa::AssociationMap> maps = {}) {
  std::vector<train::Prediction> preds;
  for (const auto& scene : s.eval) preds.push_back(train::infer(scene, params, ic, maps));
  return train::evaluate(s.eval, preds, s.eval.front().num_classes);
}

Outcome end_to_end() {
  const auto t0 = Clock::now();
  std::vector<std::string> notes;
  bool ok = true;
  const auto ic = suite::infer_config();

  {
    const auto s = suite::make(suite::Kind::baseline);
    const auto res = train::train(s.train, {}, suite::train_config(kBaselineEpochs));
    const double w = run_eval(s, res.checkpoint.params, ic).instance.m_wcov;
    const bool pass = w >= kBaselineWcov;
    ok = ok && pass;
    notes.push_back(fmt("baseline mWCov %.4f (>= %.2f %s)", w, kBaselineWcov, pass ? "ok" : "missed"));
  }
  {
    const auto s = suite::make(suite::Kind::adjacent);
    auto cfg = suite::train_config(kAdjacentEpochs);
    const auto plain = train::train(s.train, {}, cfg);
    cfg.spco_start_epoch = kSpcoStartEpoch;
    const auto spco = train::train(s.train, {}, cfg);
    const double a = run_eval(s, plain.checkpoint.params, ic).instance.m_wcov;
    const double b = run_eval(s, spco.checkpoint.params, ic).instance.m_wcov;
    const bool pass = b - a >= kSpcoGain;
    ok = ok && pass;
    notes.push_back(fmt("SPCO mWCov %.4f -> %.4f (%+.4f %s)", a, b, b - a, pass ? "ok" : "missed"));
  }
  {
    const auto s = suite::make(suite::Kind::noisy);
    const auto res = train::train(s.train, {}, suite::train_config(kNoisyEpochs));
    auto with = ic;
    with.use_msa = true;
    const auto maps = msa::build_maps(s.train, s.train.front().num_classes, with.msa);
    const double a = run_eval(s, res.checkpoint.params, ic).semantic.macc;
    const double b = run_eval(s, res.checkpoint.params, with, maps).semantic.macc;
    const bool pass = b - a >= kMsaGain;
    ok = ok && pass;
    notes.push_back(fmt("MSA mAcc %.4f -> %.4f (%+.4f %s)", a, b, b - a, pass ? "ok" : "missed"));
  }
  {
    const auto s = suite::make(suite::Kind::imbalanced);
    auto cfg = suite::train_config(kImbalancedEpochs);
    const auto plain = train::train(s.train, {}, cfg);
    cfg.wfs = true;
    const auto balanced = train::train(s.train, {}, cfg);
    const auto c = static_cast<std::size_t>(suite::kRareClass);
    const double a = run_eval(s, plain.checkpoint.params, ic).semantic.class_iou[c];
    const double b = run_eval(s, balanced.checkpoint.params, ic).semantic.class_iou[c];
    const bool pass = b - a >= kWfsGain;
    ok = ok && pass;
    notes.push_back(fmt("WFS rare-class IoU %.4f -> %.4f (%+.4f %s)", a, b, b - a, pass ? "ok" : "missed"));
  }
  const double secs = seconds_since(t0);
  const bool fast = secs < kSuiteSeconds;
  std::string detail;
  for (const auto& n : notes) detail += n + "; ";
  detail += fmt("%.0f s", secs);
  return {ok && fast, detail};
}

Outcome flip_refinement() {
  const auto fc = fixture::flip_case(kFlipSeed);
  const std::vector<Scene> train = {fixture::band_scene()};
  const msa::MsaConfig cfg;
  const auto maps = msa::build_maps(train, fc.scene.num_classes, cfg);
  const auto out = msa::refine(fc.p_sem, maps, cfg, positions(fc.scene));
  std::size_t before = 0, after = 0;
  for (std::size_t i = 0; i < fc.scene.size(); ++i) {
    before += fc.noisy[i] != fc.scene.points[i].sem;
    after += out.labels[i] != fc.scene.points[i].sem;
  }
  return {after < before && after == kFlipGoldenErrors,
          fmt("errors %zu -> %zu (golden %zu)", before, after, kFlipGoldenErrors)};
}

Outcome determinism() {
  const auto s = suite::make(suite::Kind::baseline);
  suite::Suite small;
  small.train = {s.train[0], s.train[1]};
  small.eval = {s.eval[0]};
  auto cfg = suite::train_config(2);
  cfg.spco_start_epoch = 1;
  auto ic = suite::infer_config();
  ic.use_msa = true;
  const auto maps = msa::build_maps(small.train, 8, ic.msa);
  auto once = [&] {
    const auto res = train::train(small.train, {}, cfg);
    return net::checkpoint_to_json(res.checkpoint) + metrics::report_to_json(run_eval(small, res.checkpoint.params, ic, maps));
  };
  const auto a = once();
  const auto b = once();
  return {a == b, fmt("two train+infer runs, %zu report bytes, %s", a.size(), a == b ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient suite", gradients},
      {"loss and coverage hand values", hand_values},
      {"water filling", water_filling},
      {"mean-shift on separated mixtures", mean_shift},
      {"metric oracle equivalence", metric_oracles},
      {"end-to-end synthetic suites", end_to_end},
      {"MSA flip refinement golden", flip_refinement},
      {"train+infer determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("criterion %d %s: %s: %s\n", id, o.pass ? "PASS" : "FAIL", criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
