#include "saso/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "saso/error.hpp"
#include "saso/hash.hpp"
#include "saso/log.hpp"
#include "saso/metrics.hpp"
#include "saso/msa.hpp"
#include "saso/net.hpp"
#include "saso/scene.hpp"
#include "saso/synth.hpp"
#include "saso/trainer.hpp"
#include "saso/wfs.hpp"

namespace saso::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Bad flag values detected after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// Files as given; directories expand to their *.scene entries, sorted.
std::vector<fs::path> expand_scenes(const std::vector<std::string>& items) {
  std::vector<fs::path> out;
  for (const auto& item : items) {
    const fs::path p(item);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".scene") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

std::vector<Scene> load_all(const std::vector<std::string>& items, const ValidateOptions& opts = {}) {
  std::vector<Scene> scenes;
  for (const auto& p : expand_scenes(items)) scenes.push_back(load_scene(p, opts));
  if (scenes.empty()) throw UsageError("no scene files given");
  for (const auto& s : scenes) {
    if (s.num_classes != scenes.front().num_classes) {
      throw ValidationError("scenes disagree on class count: " + s.name);
    }
  }
  return scenes;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(6) << v;
  return ss.str();
}

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "]";
}

// Options shared by every subcommand.
struct Common {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  int verbose = 0;
  bool quiet = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--threads", c.threads, "Thread cap for parallel numerics (0 = library default)")
      ->check(CLI::NonNegativeNumber);
  sub->add_flag("-v,--verbose", c.verbose, "More log output (repeatable)");
  sub->add_flag("-q,--quiet", c.quiet, "Errors only");
}

void apply_common(const Common& c) {
  if (c.quiet) {
    log::set_level(log::Level::quiet);
  } else {
    log::set_level(c.verbose >= 2 ? log::Level::debug : c.verbose == 1 ? log::Level::info : log::Level::warn);
  }
  if (c.threads > 0) Eigen::setNbThreads(c.threads);
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
  std::string config, out_dir, prefix = "room";
  int count = 1;
  std::optional<double> jitter, tint;
  std::optional<int> adjacent_pairs, adjacent_class;
};

int do_synth(const SynthArgs& a, const Common& c, std::ostream& out) {
  auto cfg = a.config.empty() ? synth::default_config() : synth::config_from_json(read_text(a.config));
  if (c.seed) cfg.seed = *c.seed;
  if (a.jitter) cfg.color_jitter = *a.jitter;
  if (a.tint) cfg.instance_tint = *a.tint;
  if (a.adjacent_pairs) cfg.adjacent_pairs = *a.adjacent_pairs;
  if (a.adjacent_class) cfg.adjacent_class = *a.adjacent_class;
  if (a.count < 1) throw UsageError("--count must be at least 1");
  const auto text = synth::config_to_json(cfg);
  out << "config hash: " << hex64(fnv1a64(json::parse(text).dump())) << '\n';
  fs::create_directories(a.out_dir);
  const auto base_seed = cfg.seed;
  for (int i = 0; i < a.count; ++i) {
    cfg.seed = base_seed + static_cast<std::uint64_t>(i);
    std::ostringstream name;
    name << a.prefix << '_' << std::setw(3) << std::setfill('0') << i;
    cfg.name = name.str();
    const auto scene = synth::generate(cfg);
    const auto path = fs::path(a.out_dir) / (name.str() + ".scene");
    save_scene(path, scene);
    out << path.string() << ' ' << scene.size() << " points\n";
  }
  write_text(fs::path(a.out_dir) / "synth_config.json", text);
  return kOk;
}

// ----------------------------------------------------------------- ingest

struct IngestArgs {
  std::string in, out;
  int classes = 0;
  bool mixed_instances = false;
};

// Headerless rows "x y z r g b sem inst", separated by whitespace or commas.
Scene read_raw(const fs::path& path, int classes) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream text;
  text << "saso-scene v1\n";
  std::vector<std::string> rows;
  std::string line;
  int max_sem = -1;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::replace(line.begin(), line.end(), ',', ' ');
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double v[6];
    int sem = 0, inst = 0;
    if (!(ls >> std::ws).good() || ls.peek() == EOF) continue;
    if (!(ls >> v[0] >> v[1] >> v[2] >> v[3] >> v[4] >> v[5] >> sem >> inst)) {
      throw ParseError(lineno, "expected x y z r g b sem inst");
    }
    max_sem = std::max(max_sem, sem);
    rows.push_back(line);
  }
  const int c = classes > 0 ? classes : max_sem + 1;
  text << rows.size() << ' ' << c << '\n';
  for (const auto& r : rows) text << r << '\n';
  std::istringstream parsed(text.str());
  return parse_scene(parsed, path.stem().string(), {.require_single_class_instances = false});
}

int do_ingest(const IngestArgs& a, const Common&, std::ostream& out) {
  const fs::path in(a.in);
  std::string head;
  {
    std::ifstream f(in);
    if (!f) throw Error("cannot open " + in.string());
    std::getline(f, head);
  }
  ValidateOptions vo{.require_single_class_instances = !a.mixed_instances};
  Scene scene = head.rfind("saso-scene", 0) == 0 ? load_scene(in, vo) : read_raw(in, a.classes);
  validate(scene, vo);
  save_scene(a.out, scene);
  const auto rep = synth::imbalance_report(scene);
  out << a.out << ": " << scene.size() << " points, " << scene.num_classes << " classes\n";
  out << "class points instances point_freq\n";
  for (std::size_t k = 0; k < rep.points.size(); ++k) {
    out << k << ' ' << rep.points[k] << ' ' << rep.instances[k] << ' ' << fmt(rep.point_freq[k]) << '\n';
  }
  return kOk;
}

// ----------------------------------------------------------------- sample

struct SampleArgs {
  std::vector<std::string> scenes;
  std::string out;
  double delta = 1e-4, cell = 1.0, stride = 0.5;
  std::size_t threshold = 100, points = 4096, min_points = 100;
  bool resample = false;
};

int do_sample(const SampleArgs& a, const Common& c, std::ostream& out) {
  if (!(a.delta > 0 && a.delta <= 1)) throw UsageError("--delta must lie in (0, 1]");
  const auto scenes = load_all(a.scenes);
  const int nc = scenes.front().num_classes;
  std::vector<BlockPtr> blocks;
  const std::uint64_t seed = c.seed.value_or(0);
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    CutOptions cut{.cell = a.cell, .stride = a.stride, .num_points = a.points,
                   .min_points = a.min_points, .seed = seed + s};
    auto b = cut_blocks(scenes[s], cut);
    blocks.insert(blocks.end(), b.begin(), b.end());
  }
  if (blocks.empty()) throw ValidationError("no blocks passed the min_points filter");
  const auto plan = wfs::make_plan(blocks, nc, a.threshold, a.delta);
  out << "blocks: " << blocks.size() << '\n';
  out << "VB = [";
  for (std::size_t k = 0; k < plan.vb.size(); ++k) out << (k ? ", " : "") << plan.vb[k];
  out << "]\n";
  out << "OP = " << list(plan.op_original) << '\n';
  out << "SP = " << list(plan.sp) << '\n';
  if (a.resample) {
    const auto drawn = wfs::resample_blocks(blocks, plan, seed);
    out << "resampled blocks: " << drawn.size() << '\n';
  }
  if (!a.out.empty()) write_text(a.out, wfs::plan_to_json(plan));
  return kOk;
}

// -------------------------------------------------------------- msa-build

struct MsaArgs {
  std::vector<std::string> scenes;
  std::string out, normalization = "min_max";
  std::vector<double> scales = {0.2, 0.3, 0.5}, weights = {0.5, 0.3, 0.2};
  bool pooled = false, exclude_self = false;
};

msa::Normalization parse_norm(const std::string& s) {
  if (s == "min_max") return msa::Normalization::min_max;
  if (s == "sum") return msa::Normalization::sum;
  throw UsageError("--normalization must be min_max or sum");
}

int do_msa_build(const MsaArgs& a, const Common&, std::ostream& out) {
  const auto scenes = load_all(a.scenes);
  msa::MsaConfig cfg;
  cfg.scales = a.scales;
  cfg.weights = a.weights;
  cfg.normalization = parse_norm(a.normalization);
  cfg.pooled_counts = a.pooled;
  cfg.exclude_self = a.exclude_self;
  if (cfg.scales.size() != cfg.weights.size()) throw UsageError("--scales and --weights differ in length");
  const auto maps = msa::build_maps(scenes, scenes.front().num_classes, cfg);
  msa::save_maps(a.out, maps, cfg);
  for (const auto& m : maps) {
    std::size_t absent = 0;
    for (bool b : m.absent) absent += b;
    out << "scale " << fmt(m.scale) << ": " << absent << " absent classes\n";
  }
  out << "wrote " << a.out << '\n';
  return kOk;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  std::vector<std::string> train, val;
  std::string out, config, log, checkpoint_dir;
  std::optional<int> epochs, batch_size, spco_start, eval_every;
  std::optional<double> lr;
  std::optional<std::size_t> points;
  bool wfs = false;
};

int do_train(const TrainArgs& a, const Common& c, std::ostream& out) {
  train::TrainConfig cfg;
  if (!a.config.empty()) cfg = train::config_from_json(read_text(a.config), cfg);
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  if (a.spco_start) cfg.spco_start_epoch = *a.spco_start;
  if (a.eval_every) cfg.eval_every = *a.eval_every;
  if (a.lr) cfg.adam.lr = *a.lr;
  if (a.points) cfg.cut.num_points = *a.points;
  if (a.wfs) cfg.wfs = true;
  if (c.seed) cfg.seed = *c.seed;
  cfg.log_path = a.log;
  cfg.checkpoint_dir = a.checkpoint_dir;
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  out << "config hash: " << train::config_hash(cfg) << '\n';
  const auto scenes = load_all(a.train);
  std::vector<Scene> val;
  if (!a.val.empty()) val = load_all(a.val);
  const auto res = train::train(scenes, val, cfg);
  net::save_checkpoint(a.out, res.checkpoint);
  out << "blocks: " << res.record.train_blocks << ", steps: " << res.record.steps.size() << '\n';
  for (const auto& e : res.record.epochs) {
    out << "epoch " << e.epoch << " loss " << fmt(e.mean_loss);
    if (e.validation) out << " val mWCov " << fmt(e.validation->instance.m_wcov);
    out << '\n';
  }
  out << "wrote " << a.out << '\n';
  return kOk;
}

// ------------------------------------------------------------------ infer

struct InferArgs {
  std::vector<std::string> scenes;
  std::string checkpoint, out_dir, config, maps;
  std::optional<double> bandwidth;
  std::optional<std::size_t> points;
  std::vector<double> msa_weights;
};

int do_infer(const InferArgs& a, const Common& c, std::ostream& out) {
  train::InferConfig cfg;
  bool weights_from_config = false;
  if (!a.config.empty()) {
    const auto text = read_text(a.config);
    cfg = train::infer_config_from_json(text, cfg);
    weights_from_config = json::parse(text).contains("msa_weights");
  }
  if (a.bandwidth) cfg.cluster.bandwidth = *a.bandwidth;
  if (a.points) cfg.cut.num_points = *a.points;
  if (c.seed) cfg.seed = *c.seed;
  std::vector<msa::AssociationMap> maps;
  if (!a.maps.empty()) {
    msa::MsaConfig stored;
    maps = msa::load_maps(a.maps, &stored);
    const auto weights = cfg.msa.weights;
    cfg.msa = stored;
    if (weights_from_config) cfg.msa.weights = weights;
    cfg.use_msa = true;
  }
  if (!a.msa_weights.empty()) cfg.msa.weights = a.msa_weights;
  if (cfg.use_msa && maps.empty()) throw UsageError("MSA enabled but no --msa maps file given");
  out << "config hash: " << hex64(fnv1a64(json::parse(train::infer_config_to_json(cfg)).dump())) << '\n';

  const auto ckpt = net::load_checkpoint(a.checkpoint);
  fs::create_directories(a.out_dir);
  for (const auto& path : expand_scenes(a.scenes)) {
    const auto scene = load_scene(path);
    const auto pred = train::infer(scene, ckpt.params, cfg, maps);
    const auto target = fs::path(a.out_dir) / path.filename();
    save_scene(target, train::prediction_scene(scene, pred));
    std::size_t k = 0;
    for (int id : pred.inst) k = std::max(k, static_cast<std::size_t>(id) + 1);
    out << target.string() << ": " << k << " instances\n";
  }
  return kOk;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  std::vector<std::string> pred, gt, class_names;
  std::string out, mode = "pooled";
  double threshold = 0.5;
};

int do_eval(const EvalArgs& a, const Common&, std::ostream& out) {
  const ValidateOptions loose{.require_single_class_instances = false};
  const auto gt = load_all(a.gt, loose);
  const auto pred = load_all(a.pred, loose);
  if (gt.size() != pred.size()) throw UsageError("--pred and --gt name different numbers of scenes");
  if (a.mode != "pooled" && a.mode != "mean") throw UsageError("--mode must be pooled or mean");
  const int nc = gt.front().num_classes;
  metrics::Evaluator pooled(nc, a.threshold);
  std::vector<metrics::EvalReport> per_scene;
  for (std::size_t s = 0; s < gt.size(); ++s) {
    if (gt[s].size() != pred[s].size()) {
      throw ValidationError("scene " + gt[s].name + ": prediction has a different point count");
    }
    const auto gs = semantic_labels(gt[s]), gi = instance_labels(gt[s]);
    const auto ps = semantic_labels(pred[s]), pi = instance_labels(pred[s]);
    pooled.add(gs, gi, ps, pi);
    if (a.mode == "mean") {
      metrics::Evaluator one(nc, a.threshold);
      one.add(gs, gi, ps, pi);
      per_scene.push_back(one.report());
    }
  }
  const auto report = a.mode == "pooled" ? pooled.report() : metrics::average_reports(per_scene);
  const auto text = metrics::report_to_json(report, a.class_names);
  if (a.out.empty()) {
    out << text << '\n';
  } else {
    write_text(a.out, text + "\n");
    out << "wrote " << a.out << '\n';
  }
  return kOk;
}

// ----------------------------------------------------------------- report

struct ReportArgs {
  std::vector<std::string> reports, labels, scenes, class_names;
  std::string out_dir;
};

int do_report(const ReportArgs& a, const Common&, std::ostream& out) {
  if (!a.labels.empty() && a.labels.size() != a.reports.size()) {
    throw UsageError("--labels must name every report");
  }
  std::vector<json> runs;
  for (const auto& r : a.reports) {
    try {
      runs.push_back(json::parse(read_text(r)));
    } catch (const json::exception& e) {
      throw ParseError(0, r + ": " + e.what());
    }
  }
  static const char* keys[] = {"mCov", "mWCov", "mPrec", "mRec", "mAcc", "mIoU", "oAcc"};
  auto label = [&](std::size_t i) {
    return a.labels.empty() ? fs::path(a.reports[i]).stem().string() : a.labels[i];
  };
  std::ostringstream csv, md;
  csv << "run";
  md << "| run |";
  for (const char* k : keys) {
    csv << ',' << k;
    md << ' ' << k << " |";
  }
  csv << '\n';
  md << "\n|---|";
  for (std::size_t k = 0; k < std::size(keys); ++k) md << "---|";
  md << '\n';
  std::size_t nc = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& j = runs[i];
    for (const char* k : keys) {
      if (!j.contains(k)) throw ValidationError(a.reports[i] + ": missing key " + k);
    }
    csv << label(i);
    md << "| " << label(i) << " |";
    for (const char* k : keys) {
      csv << ',' << fmt(j[k].get<double>());
      md << ' ' << std::fixed << std::setprecision(1) << 100.0 * j[k].get<double>() << " |";
      md << std::defaultfloat;
    }
    csv << '\n';
    md << '\n';
    nc = std::max(nc, j.value("per_class", json::array()).size());
  }
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  write_text(dir / "summary.csv", csv.str());
  write_text(dir / "summary.md", md.str());

  auto name = [&](std::size_t c) {
    return c < a.class_names.size() ? a.class_names[c] : "class" + std::to_string(c);
  };
  auto class_iou = [&](std::size_t i, std::size_t c) {
    const auto& pc = runs[i].value("per_class", json::array());
    return c < pc.size() ? pc[c].value("IoU", 0.0) : 0.0;
  };
  std::ostringstream dat;
  dat << "# class name";
  for (std::size_t i = 0; i < runs.size(); ++i) dat << ' ' << label(i);
  dat << '\n';
  for (std::size_t c = 0; c < nc; ++c) {
    dat << c << ' ' << name(c);
    for (std::size_t i = 0; i < runs.size(); ++i) dat << ' ' << fmt(class_iou(i, c));
    dat << '\n';
  }
  write_text(dir / "class_iou.dat", dat.str());

  if (!a.scenes.empty()) {
    const auto scenes = load_all(a.scenes);
    const auto C = static_cast<std::size_t>(scenes.front().num_classes);
    std::vector<double> points(C, 0.0);
    double total = 0;
    for (const auto& s : scenes) {
      for (const auto& p : s.points) points.at(static_cast<std::size_t>(p.sem)) += 1;
      total += static_cast<double>(s.size());
    }
    std::ostringstream freq;
    freq << "# class name point_freq";
    for (std::size_t i = 1; i < runs.size(); ++i) freq << " gain_" << label(i);
    freq << '\n';
    for (std::size_t c = 0; c < C; ++c) {
      freq << c << ' ' << name(c) << ' ' << fmt(points[c] / total);
      for (std::size_t i = 1; i < runs.size(); ++i) freq << ' ' << fmt(class_iou(i, c) - class_iou(0, c));
      freq << '\n';
    }
    write_text(dir / "class_frequency.dat", freq.str());
  }
  out << md.str();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Point-cloud segmentation pipeline: synthetic data, sampling, training, inference and evaluation",
               "saso"};
  app.require_subcommand(1);
  Common common;

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate labeled synthetic rooms");
  synth->add_option("--out-dir", sa.out_dir, "Output directory")->required();
  synth->add_option("--config", sa.config, "Generator config (JSON)")->check(CLI::ExistingFile);
  synth->add_option("--count", sa.count, "Number of rooms; seeds count up from --seed");
  synth->add_option("--prefix", sa.prefix, "File name prefix");
  synth->add_option("--jitter", sa.jitter, "Per-point color noise std");
  synth->add_option("--tint", sa.tint, "Per-instance color offset std");
  synth->add_option("--adjacent-pairs", sa.adjacent_pairs, "Touching same-class object pairs");
  synth->add_option("--adjacent-class", sa.adjacent_class, "Class of the touching pairs");
  add_common(synth, common);

  IngestArgs ia;
  auto* ingest = app.add_subcommand("ingest", "Validate and convert a labeled point file");
  ingest->add_option("--in", ia.in, "Scene file or headerless x y z r g b sem inst rows")
      ->required()
      ->check(CLI::ExistingFile);
  ingest->add_option("--out", ia.out, "Output scene file")->required();
  ingest->add_option("--classes", ia.classes, "Class count (default: max label + 1)");
  ingest->add_flag("--mixed-instances", ia.mixed_instances, "Allow an instance id to span classes");
  add_common(ingest, common);

  SampleArgs sma;
  auto* sample = app.add_subcommand("sample", "Cut blocks and compute the water-filling sampling plan");
  sample->add_option("--scene", sma.scenes, "Scene files or directories")->required();
  sample->add_option("--delta", sma.delta, "Fill step");
  sample->add_option("--threshold", sma.threshold, "Points of a class needed to list a block");
  sample->add_option("--cell", sma.cell, "Block edge, meters");
  sample->add_option("--stride", sma.stride, "Block stride, meters");
  sample->add_option("--points", sma.points, "Points per block");
  sample->add_option("--min-points", sma.min_points, "Minimum cell population");
  sample->add_option("--out", sma.out, "Write the plan as JSON");
  sample->add_flag("--resample", sma.resample, "Also draw the oversampled block list");
  add_common(sample, common);

  MsaArgs ma;
  auto* msa_build = app.add_subcommand("msa-build", "Build multi-scale association maps");
  msa_build->add_option("--scene", ma.scenes, "Training scene files or directories")->required();
  msa_build->add_option("--out", ma.out, "Output maps file (JSON)")->required();
  msa_build->add_option("--scales", ma.scales, "Ball radii, meters")->delimiter(',');
  msa_build->add_option("--weights", ma.weights, "Per-scale weights")->delimiter(',');
  msa_build->add_option("--normalization", ma.normalization, "min_max or sum");
  msa_build->add_flag("--pooled-counts", ma.pooled, "Pool raw neighbor counts instead of per-point distributions");
  msa_build->add_flag("--exclude-self", ma.exclude_self, "Leave the query point out of its ball");
  add_common(msa_build, common);

  TrainArgs ta;
  auto* trainc = app.add_subcommand("train", "Train the network");
  trainc->add_option("--train", ta.train, "Training scenes")->required();
  trainc->add_option("--val", ta.val, "Validation scenes");
  trainc->add_option("--out", ta.out, "Checkpoint file")->required();
  trainc->add_option("--config", ta.config, "Training config (JSON)")->check(CLI::ExistingFile);
  trainc->add_option("--log", ta.log, "Line-delimited JSON step log");
  trainc->add_option("--checkpoint-dir", ta.checkpoint_dir, "Per-epoch checkpoints");
  trainc->add_option("--epochs", ta.epochs);
  trainc->add_option("--batch-size", ta.batch_size);
  trainc->add_option("--lr", ta.lr);
  trainc->add_option("--spco-start", ta.spco_start, "First epoch with the cluster term");
  trainc->add_option("--eval-every", ta.eval_every);
  trainc->add_option("--points", ta.points, "Points per block");
  trainc->add_flag("--wfs", ta.wfs, "Water-filling block oversampling");
  add_common(trainc, common);

  InferArgs ina;
  auto* infer = app.add_subcommand("infer", "Predict semantic and instance labels");
  infer->add_option("--scene", ina.scenes, "Scene files or directories")->required();
  infer->add_option("--checkpoint", ina.checkpoint)->required()->check(CLI::ExistingFile);
  infer->add_option("--out-dir", ina.out_dir, "Prediction scenes are written here")->required();
  infer->add_option("--config", ina.config, "Inference config (JSON)")->check(CLI::ExistingFile);
  infer->add_option("--msa", ina.maps, "Association maps; enables refinement")->check(CLI::ExistingFile);
  infer->add_option("--msa-weights", ina.msa_weights, "Override per-scale weights")->delimiter(',');
  infer->add_option("--bandwidth", ina.bandwidth, "Mean-shift bandwidth");
  infer->add_option("--points", ina.points, "Points per block");
  add_common(infer, common);

  EvalArgs ea;
  auto* evalc = app.add_subcommand("eval", "Score predictions against ground truth");
  evalc->add_option("--pred", ea.pred, "Prediction scenes")->required();
  evalc->add_option("--gt", ea.gt, "Ground-truth scenes")->required();
  evalc->add_option("--out", ea.out, "Report file (default stdout)");
  evalc->add_option("--mode", ea.mode, "pooled or mean (mean of per-scene reports)");
  evalc->add_option("--threshold", ea.threshold, "IoU threshold for precision/recall");
  evalc->add_option("--class-names", ea.class_names)->delimiter(',');
  add_common(evalc, common);

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Tabulate eval reports and write plot data");
  report->add_option("--reports", ra.reports, "Eval report files; the first is the baseline")->required();
  report->add_option("--labels", ra.labels, "Row labels")->delimiter(',');
  report->add_option("--scenes", ra.scenes, "Scenes for class frequency data");
  report->add_option("--class-names", ra.class_names)->delimiter(',');
  report->add_option("--out-dir", ra.out_dir)->required();
  add_common(report, common);

  std::vector<std::string> argv_store = {"saso"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << '\n';
    const auto used = app.get_subcommands();
    err << (used.empty() ? app.help() : used.front()->help());
    return kUsage;
  }

  try {
    apply_common(common);
    if (*synth) return do_synth(sa, common, out);
    if (*ingest) return do_ingest(ia, common, out);
    if (*sample) return do_sample(sma, common, out);
    if (*msa_build) return do_msa_build(ma, common, out);
    if (*trainc) return do_train(ta, common, out);
    if (*infer) return do_infer(ina, common, out);
    if (*evalc) return do_eval(ea, common, out);
    if (*report) return do_report(ra, common, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace saso::cli
