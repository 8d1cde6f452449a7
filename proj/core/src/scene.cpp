#include "saso/scene.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string_view>

#include "saso/error.hpp"

namespace saso {
namespace {

constexpr std::string_view kMagic = "saso-scene v1";

std::string_view strip_comment(std::string_view line) {
  auto pos = line.find('#');
  if (pos != std::string_view::npos) line = line.substr(0, pos);
  return line;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  auto tok = split_ws(s);
  if (tok.empty()) return {};
  return {tok.front().data(), static_cast<std::size_t>(tok.back().data() + tok.back().size() -
                                                      tok.front().data())};
}

template <typename T>
T parse_number(std::string_view tok, std::size_t line, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(line, std::string("expected ") + what + ", got '" + std::string(tok) + "'");
  }
  return value;
}

void check_point(const Point& p, int num_classes, const std::string& where) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
    throw ValidationError(where + ": non-finite coordinate");
  }
  for (int c : {p.r, p.g, p.b}) {
    if (c < 0 || c > 255) {
      throw ValidationError(where + ": color channel out of range (" + std::to_string(c) + ")");
    }
  }
  if (p.sem < 0 || p.sem >= num_classes) {
    throw ValidationError(where + ": semantic id out of range (" + std::to_string(p.sem) +
                          " not in [0," + std::to_string(num_classes) + "))");
  }
  if (p.inst < 0) {
    throw ValidationError(where + ": negative instance id (" + std::to_string(p.inst) + ")");
  }
}

void append_double(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

Bounds Scene::bounds() const {
  Bounds b;
  if (points.empty()) return b;
  b.min = b.max = Vec3(points[0].x, points[0].y, points[0].z);
  for (const auto& p : points) {
    b.min = b.min.cwiseMin(Vec3(p.x, p.y, p.z));
    b.max = b.max.cwiseMax(Vec3(p.x, p.y, p.z));
  }
  return b;
}

std::vector<Vec3> positions(const Scene& scene) {
  std::vector<Vec3> out;
  out.reserve(scene.size());
  for (const auto& p : scene.points) out.emplace_back(p.x, p.y, p.z);
  return out;
}

std::vector<int> semantic_labels(const Scene& scene) {
  std::vector<int> out;
  out.reserve(scene.size());
  for (const auto& p : scene.points) out.push_back(p.sem);
  return out;
}

std::vector<int> instance_labels(const Scene& scene) {
  std::vector<int> out;
  out.reserve(scene.size());
  for (const auto& p : scene.points) out.push_back(p.inst);
  return out;
}

void validate(const Scene& scene, const ValidateOptions& opts) {
  if (scene.num_classes <= 0 && !scene.points.empty()) {
    throw ValidationError("class count must be positive");
  }
  std::map<int, int> inst_class;
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const auto& p = scene.points[i];
    check_point(p, scene.num_classes, "point " + std::to_string(i));
    if (opts.require_single_class_instances) {
      auto [it, inserted] = inst_class.emplace(p.inst, p.sem);
      if (!inserted && it->second != p.sem) {
        throw ValidationError("point " + std::to_string(i) + ": instance " +
                              std::to_string(p.inst) + " spans multiple semantic classes");
      }
    }
  }
}

Scene parse_scene(std::istream& in, std::string name, const ValidateOptions& opts) {
  Scene scene;
  scene.name = std::move(name);
  std::string raw;
  std::size_t line_no = 0;
  bool have_magic = false, have_header = false;
  std::size_t expected = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (!have_magic) {
      if (line != kMagic) throw ParseError(line_no, "missing 'saso-scene v1' header");
      have_magic = true;
      continue;
    }
    auto tok = split_ws(line);
    if (!have_header) {
      if (tok.size() != 2) throw ParseError(line_no, "expected '<N> <C>'");
      auto n = parse_number<long long>(tok[0], line_no, "point count");
      auto c = parse_number<int>(tok[1], line_no, "class count");
      if (n < 0) throw ParseError(line_no, "negative point count");
      if (c <= 0) throw ParseError(line_no, "class count must be positive");
      expected = static_cast<std::size_t>(n);
      scene.num_classes = c;
      scene.points.reserve(expected);
      have_header = true;
      continue;
    }
    if (tok.size() != 8) {
      throw ParseError(line_no, "expected 8 fields 'x y z r g b sem inst', got " +
                                    std::to_string(tok.size()));
    }
    if (scene.points.size() == expected) {
      throw ParseError(line_no, "more points than declared (" + std::to_string(expected) + ")");
    }
    Point p;
    p.x = parse_number<double>(tok[0], line_no, "x");
    p.y = parse_number<double>(tok[1], line_no, "y");
    p.z = parse_number<double>(tok[2], line_no, "z");
    p.r = parse_number<int>(tok[3], line_no, "r");
    p.g = parse_number<int>(tok[4], line_no, "g");
    p.b = parse_number<int>(tok[5], line_no, "b");
    p.sem = parse_number<int>(tok[6], line_no, "sem");
    p.inst = parse_number<int>(tok[7], line_no, "inst");
    check_point(p, scene.num_classes, "line " + std::to_string(line_no));
    scene.points.push_back(p);
  }
  if (!have_magic) throw ParseError(line_no, "missing 'saso-scene v1' header");
  if (!have_header) throw ParseError(line_no, "missing '<N> <C>' line");
  if (scene.points.size() != expected) {
    throw ParseError(line_no, "declared " + std::to_string(expected) + " points, found " +
                                  std::to_string(scene.points.size()));
  }
  validate(scene, opts);
  return scene;
}

Scene load_scene(const std::filesystem::path& path, const ValidateOptions& opts) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scene file: " + path.string());
  return parse_scene(in, path.stem().string(), opts);
}

void write_scene(std::ostream& out, const Scene& scene) {
  std::string buf;
  buf.reserve(64 * (scene.points.size() + 2));
  buf.append(kMagic).push_back('\n');
  buf.append(std::to_string(scene.points.size()))
      .append(" ")
      .append(std::to_string(scene.num_classes))
      .push_back('\n');
  for (const auto& p : scene.points) {
    append_double(buf, p.x);
    buf.push_back(' ');
    append_double(buf, p.y);
    buf.push_back(' ');
    append_double(buf, p.z);
    for (int v : {p.r, p.g, p.b, p.sem, p.inst}) {
      buf.push_back(' ');
      buf.append(std::to_string(v));
    }
    buf.push_back('\n');
  }
  out << buf;
}

void save_scene(const std::filesystem::path& path, const Scene& scene) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write scene file: " + path.string());
  write_scene(out, scene);
}

BlockGrid block_grid(const Scene& scene, double cell, double stride) {
  if (!(cell > 0) || !(stride > 0)) throw Error("cell and stride must be positive");
  BlockGrid grid;
  grid.cell = cell;
  grid.stride = stride;
  if (scene.empty()) return grid;
  auto b = scene.bounds();
  grid.origin_x = b.min.x();
  grid.origin_y = b.min.y();
  auto count = [&](double extent) {
    return static_cast<std::size_t>(std::floor(extent / stride + 1e-9)) + 1;
  };
  grid.nx = count(b.extent().x());
  grid.ny = count(b.extent().y());
  return grid;
}

Eigen::MatrixXd block_features(const Scene& scene, std::span<const std::size_t> indices,
                               const Bounds& room) {
  Eigen::MatrixXd f(static_cast<Eigen::Index>(indices.size()), kFeatureDim);
  const Vec3 ext = room.extent();
  for (std::size_t row = 0; row < indices.size(); ++row) {
    const auto& p = scene.points.at(indices[row]);
    const auto r = static_cast<Eigen::Index>(row);
    const double xyz[3] = {p.x, p.y, p.z};
    for (int a = 0; a < 3; ++a) {
      f(r, a) = xyz[a];
      f(r, 6 + a) = ext[a] > 0 ? (xyz[a] - room.min[a]) / ext[a] : 0.5;
    }
    f(r, 3) = p.r / 255.0;
    f(r, 4) = p.g / 255.0;
    f(r, 5) = p.b / 255.0;
  }
  return f;
}

std::vector<BlockPtr> cut_blocks(const Scene& scene, const CutOptions& opts) {
  if (opts.num_points == 0) throw Error("num_points must be positive");
  std::vector<BlockPtr> blocks;
  const BlockGrid grid = block_grid(scene, opts.cell, opts.stride);
  if (grid.num_cells() == 0) return blocks;

  std::vector<std::vector<std::size_t>> members(grid.num_cells());
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const auto& p = scene.points[i];
    auto range = [&](double v, double origin, std::size_t n) {
      // Cells k with origin + k*stride <= v < origin + k*stride + cell.
      double rel = v - origin;
      auto hi = static_cast<long long>(std::floor(rel / opts.stride));
      auto lo = static_cast<long long>(std::floor((rel - opts.cell) / opts.stride));
      lo = std::max<long long>(lo, 0);
      hi = std::min<long long>(hi, static_cast<long long>(n) - 1);
      return std::pair{lo, hi};
    };
    auto [xlo, xhi] = range(p.x, grid.origin_x, grid.nx);
    auto [ylo, yhi] = range(p.y, grid.origin_y, grid.ny);
    for (long long ix = xlo; ix <= xhi; ++ix) {
      const double x0 = grid.cell_x0(static_cast<std::size_t>(ix));
      if (!(p.x >= x0 && p.x < x0 + opts.cell)) continue;
      for (long long iy = ylo; iy <= yhi; ++iy) {
        const double y0 = grid.cell_y0(static_cast<std::size_t>(iy));
        if (!(p.y >= y0 && p.y < y0 + opts.cell)) continue;
        members[static_cast<std::size_t>(ix) * grid.ny + static_cast<std::size_t>(iy)].push_back(i);
      }
    }
  }

  const Bounds room = scene.bounds();
  auto make_block = [&](std::vector<std::size_t> idx, std::size_t cell_index) {
    auto blk = std::make_shared<Block>();
    blk->features = block_features(scene, idx, room);
    blk->sem_labels.reserve(idx.size());
    blk->inst_labels.reserve(idx.size());
    for (auto i : idx) {
      blk->sem_labels.push_back(scene.points[i].sem);
      blk->inst_labels.push_back(scene.points[i].inst);
    }
    blk->point_indices = std::move(idx);
    blk->cell_index = cell_index;
    blk->x0 = grid.cell_x0(cell_index / grid.ny);
    blk->y0 = grid.cell_y0(cell_index % grid.ny);
    return BlockPtr(std::move(blk));
  };

  const std::size_t np = opts.num_points;
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto& pop = members[c];
    if (pop.empty() || pop.size() < opts.min_points) continue;
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                      static_cast<std::uint32_t>(c)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);

    if (opts.cover_all) {
      std::shuffle(pop.begin(), pop.end(), rng);
      for (std::size_t start = 0; start < pop.size(); start += np) {
        std::vector<std::size_t> idx(pop.begin() + static_cast<std::ptrdiff_t>(start),
                                     pop.begin() + static_cast<std::ptrdiff_t>(std::min(start + np, pop.size())));
        while (idx.size() < np) idx.push_back(pop[pick(rng)]);
        blocks.push_back(make_block(std::move(idx), c));
      }
      continue;
    }

    std::vector<std::size_t> idx;
    if (pop.size() >= np) {
      // Partial Fisher-Yates: first np entries become a uniform sample without replacement.
      for (std::size_t k = 0; k < np; ++k) {
        std::uniform_int_distribution<std::size_t> d(k, pop.size() - 1);
        std::swap(pop[k], pop[d(rng)]);
      }
      idx.assign(pop.begin(), pop.begin() + static_cast<std::ptrdiff_t>(np));
    } else {
      // Keep every point once, pad with replacement draws.
      idx = pop;
      while (idx.size() < np) idx.push_back(pop[pick(rng)]);
      std::shuffle(idx.begin(), idx.end(), rng);
    }
    blocks.push_back(make_block(std::move(idx), c));
  }
  return blocks;
}

}  // namespace saso
