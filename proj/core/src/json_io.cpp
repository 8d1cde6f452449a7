// JSON encodings for every file format the library reads or writes.
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "saso/error.hpp"
#include "saso/hash.hpp"
#include "saso/metrics.hpp"
#include "saso/msa.hpp"
#include "saso/net.hpp"
#include "saso/synth.hpp"
#include "saso/trainer.hpp"
#include "saso/wfs.hpp"

using nlohmann::json;

namespace saso {
namespace {

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::MatrixXd rows_matrix(const json& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto c = n ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
  Eigen::MatrixXd m(n, c);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(r.size()) != c) throw Error("ragged matrix in JSON");
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = r.at(static_cast<std::size_t>(j)).get<double>();
  }
  return m;
}

json tensor_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd json_tensor(const json& j) {
  const auto r = j.at("rows").get<Eigen::Index>();
  const auto c = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != r * c) throw Error("tensor size mismatch in JSON");
  Eigen::MatrixXd m(r, c);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index jj = 0; jj < c; ++jj) m(i, jj) = data.at(k++).get<double>();
  return m;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const char* what) {
  if (!obj.is_object()) throw Error(std::string(what) + ": expected a JSON object");
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) throw Error(std::string(what) + ": unknown key '" + k + "'");
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
  auto it = obj.find(key);
  if (it != obj.end()) out = it->get<T>();
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string(what) + ": invalid JSON: " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text << '\n';
}

}  // namespace

// ---------------------------------------------------------------- wfs

std::string wfs::plan_to_json(const SamplingPlan& plan, std::span<const std::string> names) {
  json cats = json::array();
  const auto counts = draw_counts(plan);
  for (std::size_t c = 0; c < plan.vb.size(); ++c) {
    json e = {{"category", c},
              {"vb", plan.vb[c]},
              {"op_original", plan.op_original[c]},
              {"op_filled", plan.op_filled[c]},
              {"sp", plan.sp[c]},
              {"draws", counts[c]}};
    if (c < names.size()) e["name"] = names[c];
    cats.push_back(std::move(e));
  }
  json j = {{"format", "saso-wfs-plan"},
            {"version", 1},
            {"delta", plan.delta},
            {"threshold", plan.threshold},
            {"num_blocks", plan.num_blocks},
            {"iterations", plan.iterations},
            {"op_original", plan.op_original},
            {"op_filled", plan.op_filled},
            {"sp", plan.sp},
            {"vb", plan.vb},
            {"categories", std::move(cats)}};
  return j.dump(2);
}

// ---------------------------------------------------------------- msa

std::string msa::maps_to_json(std::span<const AssociationMap> maps, const MsaConfig& cfg) {
  json jm = json::array();
  for (const auto& m : maps) {
    jm.push_back({{"scale", m.scale},
                  {"matrix", matrix_rows(m.matrix)},
                  {"support", m.support},
                  {"absent", m.absent}});
  }
  json j = {{"format", "saso-msa-maps"},
            {"version", 1},
            {"scales", cfg.scales},
            {"weights", cfg.weights},
            {"normalization", cfg.normalization == Normalization::min_max ? "min_max" : "sum"},
            {"pooled_counts", cfg.pooled_counts},
            {"exclude_self", cfg.exclude_self},
            {"maps", std::move(jm)}};
  return j.dump(2);
}

std::vector<msa::AssociationMap> msa::maps_from_json(const std::string& text, MsaConfig* cfg) {
  const json j = parse_json(text, "association maps");
  if (j.value("format", "") != "saso-msa-maps") throw Error("not a saso-msa-maps file");
  if (j.value("version", 0) != 1) throw Error("unsupported association map version");
  std::vector<AssociationMap> out;
  for (const auto& jm : j.at("maps")) {
    AssociationMap m;
    m.scale = jm.at("scale").get<double>();
    m.matrix = rows_matrix(jm.at("matrix"));
    m.support = jm.at("support").get<std::vector<double>>();
    m.absent = jm.at("absent").get<std::vector<bool>>();
    if (m.matrix.rows() != m.matrix.cols()) throw Error("association map is not square");
    out.push_back(std::move(m));
  }
  if (cfg) {
    cfg->scales = j.at("scales").get<std::vector<double>>();
    cfg->weights = j.at("weights").get<std::vector<double>>();
    cfg->normalization =
        j.value("normalization", "min_max") == "sum" ? Normalization::sum : Normalization::min_max;
    cfg->pooled_counts = j.value("pooled_counts", false);
    cfg->exclude_self = j.value("exclude_self", false);
  }
  return out;
}

void msa::save_maps(const std::filesystem::path& path, std::span<const AssociationMap> maps,
                    const MsaConfig& cfg) {
  write_file(path, maps_to_json(maps, cfg));
}

std::vector<msa::AssociationMap> msa::load_maps(const std::filesystem::path& path, MsaConfig* cfg) {
  return maps_from_json(read_file(path), cfg);
}

// ---------------------------------------------------------------- metrics

std::string metrics::report_to_json(const EvalReport& r, std::span<const std::string> names) {
  json per_class = json::array();
  const auto& ins = r.instance;
  const auto& sem = r.semantic;
  for (std::size_t c = 0; c < sem.class_iou.size(); ++c) {
    json e = {{"class", c},
              {"present", static_cast<bool>(sem.present[c])},
              {"IoU", sem.class_iou[c]},
              {"Acc", sem.class_acc[c]},
              {"gt_instances", ins.gt_count[c]},
              {"Cov", ins.cov[c]},
              {"WCov", ins.wcov[c]},
              {"Prec", ins.precision[c]},
              {"Rec", ins.recall[c]}};
    if (c < names.size()) e["name"] = names[c];
    per_class.push_back(std::move(e));
  }
  json conf = json::array();
  for (Eigen::Index i = 0; i < sem.confusion.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < sem.confusion.cols(); ++j) row.push_back(sem.confusion(i, j));
    conf.push_back(std::move(row));
  }
  json j = {{"mCov", ins.m_cov},   {"mWCov", ins.m_wcov}, {"mPrec", ins.m_prec},
            {"mRec", ins.m_rec},   {"mAcc", sem.macc},    {"mIoU", sem.miou},
            {"oAcc", sem.oacc},    {"scenes", r.scenes},  {"points", r.points},
            {"per_class", std::move(per_class)},          {"confusion", std::move(conf)}};
  return j.dump(2);
}

// ---------------------------------------------------------------- net

std::string net::checkpoint_to_json(const Checkpoint& ckpt) {
  const auto& s = ckpt.params.shape;
  json tensors = json::array();
  for (const auto& t : ckpt.params.tensors) tensors.push_back(tensor_json(t));
  json m = json::array(), v = json::array();
  for (const auto& t : ckpt.adam.m) m.push_back(tensor_json(t));
  for (const auto& t : ckpt.adam.v) v.push_back(tensor_json(t));
  json config = ckpt.config_json.empty() ? json::object() : json::parse(ckpt.config_json);
  json j = {{"format", "saso-checkpoint"},
            {"version", 1},
            {"config_hash", ckpt.config_hash},
            {"config", std::move(config)},
            {"epoch", ckpt.epoch},
            {"shape",
             {{"input", s.input},
              {"trunk", s.trunk},
              {"classes", s.classes},
              {"embed", s.embed},
              {"free_mode", s.free_mode},
              {"free_points", s.free_points}}},
            {"tensors", std::move(tensors)},
            {"adam", {{"step", ckpt.adam.step}, {"m", std::move(m)}, {"v", std::move(v)}}}};
  return j.dump();
}

net::Checkpoint net::checkpoint_from_json(const std::string& text) {
  const json j = parse_json(text, "checkpoint");
  if (j.value("format", "") != "saso-checkpoint") throw Error("not a saso-checkpoint file");
  if (j.value("version", 0) != 1) throw Error("unsupported checkpoint version");
  Checkpoint c;
  const auto& s = j.at("shape");
  NetShape shape;
  shape.input = s.at("input").get<int>();
  shape.trunk = s.at("trunk").get<std::vector<int>>();
  shape.classes = s.at("classes").get<int>();
  shape.embed = s.at("embed").get<int>();
  shape.free_mode = s.at("free_mode").get<bool>();
  shape.free_points = s.at("free_points").get<int>();
  c.params = zero_params(shape);
  const auto& tensors = j.at("tensors");
  if (tensors.size() != c.params.tensors.size()) throw Error("checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto t = json_tensor(tensors[i]);
    if (t.rows() != c.params.tensors[i].rows() || t.cols() != c.params.tensors[i].cols()) {
      throw Error("checkpoint tensor " + std::to_string(i) + " has the wrong shape");
    }
    c.params.tensors[i] = std::move(t);
  }
  c.adam = init_adam(c.params);
  const auto& a = j.at("adam");
  c.adam.step = a.at("step").get<std::int64_t>();
  if (a.at("m").size() == c.params.tensors.size() && a.at("v").size() == c.params.tensors.size()) {
    for (std::size_t i = 0; i < c.params.tensors.size(); ++i) {
      c.adam.m[i] = json_tensor(a.at("m")[i]);
      c.adam.v[i] = json_tensor(a.at("v")[i]);
    }
  }
  c.config_hash = j.value("config_hash", "");
  c.config_json = j.contains("config") ? j.at("config").dump() : std::string{};
  c.epoch = j.value("epoch", 0);
  return c;
}

void net::save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, checkpoint_to_json(ckpt));
}

net::Checkpoint net::load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_file(path));
}

// ---------------------------------------------------------------- synth

std::string synth::config_to_json(const SynthConfig& cfg) {
  json objs = json::array();
  for (const auto& o : cfg.objects) {
    objs.push_back({{"sem", o.sem},
                    {"shape", o.shape == Shape::box ? "box" : "cylinder"},
                    {"size_x", o.size_x},
                    {"size_y", o.size_y},
                    {"height", o.height},
                    {"count_min", o.count_min},
                    {"count_max", o.count_max},
                    {"presence", o.presence}});
  }
  json j = {{"name", cfg.name},
            {"room_x", cfg.room_x},
            {"room_y", cfg.room_y},
            {"wall_height", cfg.wall_height},
            {"density", cfg.density},
            {"color_jitter", cfg.color_jitter},
            {"instance_tint", cfg.instance_tint},
            {"min_gap", cfg.min_gap},
            {"wall_margin", cfg.wall_margin},
            {"adjacent_pairs", cfg.adjacent_pairs},
            {"adjacent_class", cfg.adjacent_class},
            {"max_retries", cfg.max_retries},
            {"num_classes", cfg.num_classes},
            {"class_names", cfg.class_names},
            {"palette", cfg.palette},
            {"objects", std::move(objs)},
            {"floor_class", cfg.floor_class},
            {"wall_class", cfg.wall_class},
            {"seed", cfg.seed}};
  return j.dump(2);
}

synth::SynthConfig synth::config_from_json(const std::string& text) {
  const json j = parse_json(text, "synth config");
  reject_unknown(j,
                 {"name", "room_x", "room_y", "wall_height", "density", "color_jitter",
                  "instance_tint", "min_gap", "wall_margin", "adjacent_pairs", "adjacent_class",
                  "max_retries", "num_classes", "class_names", "palette", "objects", "floor_class",
                  "wall_class", "seed"},
                 "synth config");
  SynthConfig cfg = default_config();
  read_opt(j, "name", cfg.name);
  read_opt(j, "room_x", cfg.room_x);
  read_opt(j, "room_y", cfg.room_y);
  read_opt(j, "wall_height", cfg.wall_height);
  read_opt(j, "density", cfg.density);
  read_opt(j, "color_jitter", cfg.color_jitter);
  read_opt(j, "instance_tint", cfg.instance_tint);
  read_opt(j, "min_gap", cfg.min_gap);
  read_opt(j, "wall_margin", cfg.wall_margin);
  read_opt(j, "adjacent_pairs", cfg.adjacent_pairs);
  read_opt(j, "adjacent_class", cfg.adjacent_class);
  read_opt(j, "max_retries", cfg.max_retries);
  read_opt(j, "num_classes", cfg.num_classes);
  read_opt(j, "class_names", cfg.class_names);
  read_opt(j, "palette", cfg.palette);
  read_opt(j, "floor_class", cfg.floor_class);
  read_opt(j, "wall_class", cfg.wall_class);
  read_opt(j, "seed", cfg.seed);
  if (j.contains("objects")) {
    cfg.objects.clear();
    for (const auto& jo : j.at("objects")) {
      reject_unknown(jo, {"sem", "shape", "size_x", "size_y", "height", "count_min", "count_max", "presence"},
                     "synth object");
      ObjectClass o;
      read_opt(jo, "sem", o.sem);
      const std::string shape = jo.value("shape", "box");
      if (shape != "box" && shape != "cylinder") throw Error("synth object: unknown shape '" + shape + "'");
      o.shape = shape == "box" ? Shape::box : Shape::cylinder;
      read_opt(jo, "size_x", o.size_x);
      read_opt(jo, "size_y", o.size_y);
      read_opt(jo, "height", o.height);
      read_opt(jo, "count_min", o.count_min);
      read_opt(jo, "count_max", o.count_max);
      read_opt(jo, "presence", o.presence);
      cfg.objects.push_back(o);
    }
  }
  return cfg;
}

// ---------------------------------------------------------------- train

namespace {

json train_json(const train::TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.adam.lr},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"adam_eps", c.adam.eps},
          {"zeta_v", c.loss.zeta_v},
          {"zeta_d", c.loss.zeta_d},
          {"lambda_reg", c.loss.lambda_reg},
          {"cluster_impure_only", c.loss.cluster_impure_only},
          {"sem_weight", c.sem_weight},
          {"spco_start_epoch", c.spco_start_epoch},
          {"spco_bandwidth", c.spco_cluster.bandwidth},
          {"spco_max_seeds", c.spco_cluster.max_seeds},
          {"spco_fraction", c.spco_fraction},
          {"wfs", c.wfs},
          {"wfs_threshold", c.wfs_threshold},
          {"wfs_delta", c.wfs_delta},
          {"block_cell", c.cut.cell},
          {"block_stride", c.cut.stride},
          {"block_points", c.cut.num_points},
          {"block_min_points", c.cut.min_points},
          {"trunk", c.net.trunk},
          {"embed", c.net.embed},
          {"eval_every", c.eval_every},
          {"seed", c.seed}};
}

const std::set<std::string> kTrainKeys = {
    "epochs",      "batch_size",   "lr",          "beta1",           "beta2",
    "adam_eps",    "zeta_v",       "zeta_d",      "lambda_reg",      "cluster_impure_only",
    "sem_weight",  "spco_start_epoch", "spco_bandwidth", "spco_max_seeds", "spco_fraction",
    "wfs",         "wfs_threshold", "wfs_delta",  "block_cell",      "block_stride",
    "block_points", "block_min_points", "trunk",  "embed",           "eval_every",
    "seed"};

}  // namespace

std::string train::config_to_json(const TrainConfig& cfg) { return train_json(cfg).dump(2); }

train::TrainConfig train::config_from_json(const std::string& text, const TrainConfig& base) {
  const json j = parse_json(text, "train config");
  reject_unknown(j, kTrainKeys, "train config");
  TrainConfig c = base;
  read_opt(j, "epochs", c.epochs);
  read_opt(j, "batch_size", c.batch_size);
  read_opt(j, "lr", c.adam.lr);
  read_opt(j, "beta1", c.adam.beta1);
  read_opt(j, "beta2", c.adam.beta2);
  read_opt(j, "adam_eps", c.adam.eps);
  read_opt(j, "zeta_v", c.loss.zeta_v);
  read_opt(j, "zeta_d", c.loss.zeta_d);
  read_opt(j, "lambda_reg", c.loss.lambda_reg);
  read_opt(j, "cluster_impure_only", c.loss.cluster_impure_only);
  read_opt(j, "sem_weight", c.sem_weight);
  read_opt(j, "spco_start_epoch", c.spco_start_epoch);
  read_opt(j, "spco_bandwidth", c.spco_cluster.bandwidth);
  read_opt(j, "spco_max_seeds", c.spco_cluster.max_seeds);
  read_opt(j, "spco_fraction", c.spco_fraction);
  read_opt(j, "wfs", c.wfs);
  read_opt(j, "wfs_threshold", c.wfs_threshold);
  read_opt(j, "wfs_delta", c.wfs_delta);
  read_opt(j, "block_cell", c.cut.cell);
  read_opt(j, "block_stride", c.cut.stride);
  read_opt(j, "block_points", c.cut.num_points);
  read_opt(j, "block_min_points", c.cut.min_points);
  read_opt(j, "trunk", c.net.trunk);
  read_opt(j, "embed", c.net.embed);
  read_opt(j, "eval_every", c.eval_every);
  read_opt(j, "seed", c.seed);
  c.spco_cluster.merge_tol = c.spco_cluster.bandwidth / 2;
  c.validate();
  return c;
}

std::string train::config_hash(const TrainConfig& cfg) { return hex64(fnv1a64(train_json(cfg).dump())); }

namespace {

json infer_json(const train::InferConfig& c) {
  return {{"block_cell", c.cut.cell},
          {"block_stride", c.cut.stride},
          {"block_points", c.cut.num_points},
          {"bandwidth", c.cluster.bandwidth},
          {"max_seeds", c.cluster.max_seeds},
          {"l1_assignment", c.cluster.l1_assignment},
          {"merge_voxel", c.merge.voxel_size},
          {"merge_overlap", c.merge.overlap_frac},
          {"merge_unify", c.merge.unify_frac},
          {"merge_min_fragment", c.merge.min_fragment_points},
          {"msa", c.use_msa},
          {"msa_scales", c.msa.scales},
          {"msa_weights", c.msa.weights},
          {"seed", c.seed}};
}

}  // namespace

std::string train::infer_config_to_json(const InferConfig& cfg) { return infer_json(cfg).dump(2); }

train::InferConfig train::infer_config_from_json(const std::string& text, const InferConfig& base) {
  const json j = parse_json(text, "infer config");
  reject_unknown(j,
                 {"block_cell", "block_stride", "block_points", "bandwidth", "max_seeds",
                  "l1_assignment", "merge_voxel", "merge_overlap", "merge_unify", "merge_min_fragment", "msa",
                  "msa_scales", "msa_weights", "seed"},
                 "infer config");
  InferConfig c = base;
  read_opt(j, "block_cell", c.cut.cell);
  read_opt(j, "block_stride", c.cut.stride);
  read_opt(j, "block_points", c.cut.num_points);
  read_opt(j, "bandwidth", c.cluster.bandwidth);
  read_opt(j, "max_seeds", c.cluster.max_seeds);
  read_opt(j, "l1_assignment", c.cluster.l1_assignment);
  read_opt(j, "merge_voxel", c.merge.voxel_size);
  read_opt(j, "merge_overlap", c.merge.overlap_frac);
  read_opt(j, "merge_unify", c.merge.unify_frac);
  read_opt(j, "merge_min_fragment", c.merge.min_fragment_points);
  read_opt(j, "msa", c.use_msa);
  read_opt(j, "msa_scales", c.msa.scales);
  read_opt(j, "msa_weights", c.msa.weights);
  read_opt(j, "seed", c.seed);
  c.cluster.merge_tol = c.cluster.bandwidth / 2;
  c.msa.validate();
  return c;
}

std::string train::step_to_json(const StepRecord& step) {
  json j = {{"epoch", step.epoch}, {"step", step.step}};
  for (const auto& [k, v] : step.terms) j[k] = v;
  return j.dump();
}

}  // namespace saso
