#include "saso/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "saso/error.hpp"

namespace saso::synth {
namespace {

struct Footprint {
  double x0, y0, x1, y1;
};

struct Placed {
  int sem;
  Shape shape;
  double cx, cy, sx, sy, h;
  Footprint fp() const { return {cx - sx / 2, cy - sy / 2, cx + sx / 2, cy + sy / 2}; }
};

double gap_between(const Footprint& a, const Footprint& b) {
  const double dx = std::max({0.0, b.x0 - a.x1, a.x0 - b.x1});
  const double dy = std::max({0.0, b.y0 - a.y1, a.y0 - b.y1});
  if (dx == 0 && dy == 0) {
    // Overlapping or touching: negative penetration depth.
    const double ox = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
    const double oy = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
    return -std::min(ox, oy);
  }
  return std::hypot(dx, dy);
}

bool inside(const Footprint& f, double x, double y) {
  return x > f.x0 && x < f.x1 && y > f.y0 && y < f.y1;
}

class Sampler {
 public:
  Sampler(const SynthConfig& cfg, Scene& scene, std::mt19937_64& rng)
      : cfg_(cfg), scene_(scene), rng_(rng) {}

  std::size_t count_for(double area) const {
    return static_cast<std::size_t>(std::llround(area * cfg_.density));
  }

  void emit(double x, double y, double z, int sem, int inst, const std::array<double, 3>& tint) {
    std::normal_distribution<double> jitter(0.0, cfg_.color_jitter);
    Point p{x, y, z, 0, 0, 0, sem, inst};
    const auto& base = cfg_.palette[static_cast<std::size_t>(sem)];
    int* ch[3] = {&p.r, &p.g, &p.b};
    for (int c = 0; c < 3; ++c) {
      const double v = base[static_cast<std::size_t>(c)] + tint[static_cast<std::size_t>(c)] +
                       (cfg_.color_jitter > 0 ? jitter(rng_) : 0.0);
      *ch[c] = static_cast<int>(std::clamp(std::lround(v), 0L, 255L));
    }
    scene_.points.push_back(p);
  }

  // Axis-aligned rectangle spanned by origin + u * a + v * b, u, v in [0,1].
  void rect(const Vec3& origin, const Vec3& a, const Vec3& b, int sem, int inst,
            const std::array<double, 3>& tint) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = count_for(a.norm() * b.norm());
    for (std::size_t k = 0; k < n; ++k) {
      const Vec3 p = origin + u(rng_) * a + u(rng_) * b;
      emit(p.x(), p.y(), p.z(), sem, inst, tint);
    }
  }

  void disk(double cx, double cy, double z, double r, int sem, int inst,
            const std::array<double, 3>& tint) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = count_for(std::numbers::pi * r * r);
    for (std::size_t k = 0; k < n; ++k) {
      const double rr = r * std::sqrt(u(rng_));
      const double t = 2 * std::numbers::pi * u(rng_);
      emit(cx + rr * std::cos(t), cy + rr * std::sin(t), z, sem, inst, tint);
    }
  }

  void tube(double cx, double cy, double r, double h, int sem, int inst,
            const std::array<double, 3>& tint) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = count_for(2 * std::numbers::pi * r * h);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = 2 * std::numbers::pi * u(rng_);
      emit(cx + r * std::cos(t), cy + r * std::sin(t), h * u(rng_), sem, inst, tint);
    }
  }

  std::array<double, 3> tint() {
    if (cfg_.instance_tint <= 0) return {0, 0, 0};
    std::normal_distribution<double> d(0.0, cfg_.instance_tint);
    return {d(rng_), d(rng_), d(rng_)};
  }

 private:
  const SynthConfig& cfg_;
  Scene& scene_;
  std::mt19937_64& rng_;
};

void check_config(const SynthConfig& cfg) {
  if (!(cfg.room_x[0] > 0) || !(cfg.room_y[0] > 0) || cfg.room_x[1] < cfg.room_x[0] ||
      cfg.room_y[1] < cfg.room_y[0] || !(cfg.wall_height > 0)) {
    throw Error("synth: room extents must be positive ranges");
  }
  if (!(cfg.density > 0)) throw Error("synth: density must be positive");
  if (cfg.num_classes <= 0 || cfg.palette.size() != static_cast<std::size_t>(cfg.num_classes)) {
    throw Error("synth: palette must have one color per class");
  }
  auto check_class = [&](int c) {
    if (c < 0 || c >= cfg.num_classes) throw Error("synth: class id out of range");
  };
  check_class(cfg.floor_class);
  check_class(cfg.wall_class);
  for (const auto& o : cfg.objects) {
    check_class(o.sem);
    if (o.count_min < 0 || o.count_max < o.count_min) throw Error("synth: bad object count range");
  }
  if (cfg.adjacent_pairs > 0) {
    auto it = std::find_if(cfg.objects.begin(), cfg.objects.end(),
                           [&](const ObjectClass& o) { return o.sem == cfg.adjacent_class; });
    if (it == cfg.objects.end()) throw Error("synth: adjacent_class has no object description");
  }
}

}  // namespace

SynthConfig default_config() {
  SynthConfig cfg;
  cfg.num_classes = 8;
  cfg.class_names = {"floor", "wall", "table", "chair", "cabinet", "sofa", "lamp", "bin"};
  cfg.palette = {{120, 110, 100}, {200, 200, 190}, {150, 90, 40}, {40, 90, 160},
                 {90, 150, 60},   {160, 40, 60},   {230, 200, 40}, {60, 60, 60}};
  auto box = [](int sem, std::array<double, 2> sx, std::array<double, 2> sy, std::array<double, 2> h,
                int lo, int hi) {
    ObjectClass o;
    o.sem = sem;
    o.size_x = sx;
    o.size_y = sy;
    o.height = h;
    o.count_min = lo;
    o.count_max = hi;
    return o;
  };
  cfg.objects.push_back(box(2, {0.8, 1.2}, {0.6, 0.8}, {0.7, 0.8}, 1, 1));    // table
  cfg.objects.push_back(box(3, {0.4, 0.5}, {0.4, 0.5}, {0.4, 0.5}, 1, 3));    // chair
  cfg.objects.push_back(box(4, {0.5, 0.8}, {0.4, 0.5}, {1.0, 1.3}, 0, 1));    // cabinet
  cfg.objects.push_back(box(5, {1.2, 1.6}, {0.7, 0.9}, {0.5, 0.6}, 0, 1));    // sofa
  ObjectClass lamp = box(6, {0.3, 0.4}, {0.3, 0.4}, {1.1, 1.4}, 0, 1);
  lamp.shape = Shape::cylinder;
  cfg.objects.push_back(lamp);
  ObjectClass bin = box(7, {0.3, 0.35}, {0.3, 0.35}, {0.35, 0.45}, 0, 1);
  bin.shape = Shape::cylinder;
  cfg.objects.push_back(bin);
  return cfg;
}

Scene generate(const SynthConfig& cfg) {
  check_config(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto in_range = [&](const std::array<double, 2>& r) { return r[0] + (r[1] - r[0]) * u(rng); };

  const double lx = in_range(cfg.room_x);
  const double ly = in_range(cfg.room_y);
  const double hz = cfg.wall_height;

  // Object list: regular objects, then touching pairs.
  std::vector<Placed> placed;
  auto fits_room = [&](const Footprint& f) {
    return f.x0 >= cfg.wall_margin && f.y0 >= cfg.wall_margin && f.x1 <= lx - cfg.wall_margin &&
           f.y1 <= ly - cfg.wall_margin;
  };
  auto clear_of = [&](const Footprint& f, std::size_t skip_from) {
    for (std::size_t k = 0; k < placed.size(); ++k) {
      if (k >= skip_from) continue;
      if (gap_between(f, placed[k].fp()) < cfg.min_gap) return false;
    }
    return true;
  };
  auto draw_size = [&](const ObjectClass& o) {
    Placed p{o.sem, o.shape, 0, 0, in_range(o.size_x), 0, in_range(o.height)};
    p.sy = o.shape == Shape::cylinder ? p.sx : in_range(o.size_y);
    return p;
  };

  for (const auto& o : cfg.objects) {
    if (u(rng) >= o.presence) continue;
    std::uniform_int_distribution<int> cnt(o.count_min, o.count_max);
    const int n = cnt(rng);
    for (int k = 0; k < n; ++k) {
      Placed p = draw_size(o);
      bool ok = false;
      for (int attempt = 0; attempt < cfg.max_retries && !ok; ++attempt) {
        p.cx = p.sx / 2 + cfg.wall_margin + (lx - p.sx - 2 * cfg.wall_margin) * u(rng);
        p.cy = p.sy / 2 + cfg.wall_margin + (ly - p.sy - 2 * cfg.wall_margin) * u(rng);
        ok = fits_room(p.fp()) && clear_of(p.fp(), placed.size());
      }
      if (!ok) throw Error("synth: could not place object of class " + std::to_string(o.sem));
      placed.push_back(p);
    }
  }

  if (cfg.adjacent_pairs > 0) {
    const auto& o = *std::find_if(cfg.objects.begin(), cfg.objects.end(),
                                  [&](const ObjectClass& c) { return c.sem == cfg.adjacent_class; });
    for (int k = 0; k < cfg.adjacent_pairs; ++k) {
      Placed a = draw_size(o), b = draw_size(o);
      const bool along_x = u(rng) < 0.5;
      bool ok = false;
      for (int attempt = 0; attempt < cfg.max_retries && !ok; ++attempt) {
        const double w = along_x ? a.sx + b.sx : std::max(a.sx, b.sx);
        const double d = along_x ? std::max(a.sy, b.sy) : a.sy + b.sy;
        const double x0 = cfg.wall_margin + (lx - w - 2 * cfg.wall_margin) * u(rng);
        const double y0 = cfg.wall_margin + (ly - d - 2 * cfg.wall_margin) * u(rng);
        if (along_x) {
          a.cx = x0 + a.sx / 2;
          b.cx = x0 + a.sx + b.sx / 2;
          a.cy = b.cy = y0 + d / 2;
        } else {
          a.cy = y0 + a.sy / 2;
          b.cy = y0 + a.sy + b.sy / 2;
          a.cx = b.cx = x0 + w / 2;
        }
        ok = fits_room(a.fp()) && fits_room(b.fp()) && clear_of(a.fp(), placed.size()) &&
             clear_of(b.fp(), placed.size());
      }
      if (!ok) throw Error("synth: could not place adjacent pair");
      placed.push_back(a);
      placed.push_back(b);
    }
  }

  Scene scene;
  scene.name = cfg.name;
  scene.num_classes = cfg.num_classes;
  Sampler s(cfg, scene, rng);
  int inst = 0;

  // Floor, minus object footprints.
  {
    double visible = lx * ly;
    for (const auto& p : placed) {
      visible -= p.shape == Shape::cylinder ? std::numbers::pi * p.sx * p.sx / 4 : p.sx * p.sy;
    }
    const std::size_t n = s.count_for(std::max(visible, 0.0));
    const auto tint = s.tint();
    std::size_t made = 0;
    while (made < n) {
      const double x = lx * u(rng), y = ly * u(rng);
      bool covered = false;
      for (const auto& p : placed) {
        if (p.shape == Shape::cylinder) {
          covered = std::hypot(x - p.cx, y - p.cy) < p.sx / 2;
        } else {
          covered = inside(p.fp(), x, y);
        }
        if (covered) break;
      }
      if (covered) continue;
      s.emit(x, y, 0.0, cfg.floor_class, inst, tint);
      ++made;
    }
    ++inst;
  }
  // Walls: x = 0, x = lx, y = 0, y = ly.
  const Vec3 up(0, 0, hz);
  s.rect(Vec3(0, 0, 0), Vec3(0, ly, 0), up, cfg.wall_class, inst++, s.tint());
  s.rect(Vec3(lx, 0, 0), Vec3(0, ly, 0), up, cfg.wall_class, inst++, s.tint());
  s.rect(Vec3(0, 0, 0), Vec3(lx, 0, 0), up, cfg.wall_class, inst++, s.tint());
  s.rect(Vec3(0, ly, 0), Vec3(lx, 0, 0), up, cfg.wall_class, inst++, s.tint());

  for (const auto& p : placed) {
    const auto tint = s.tint();
    if (p.shape == Shape::cylinder) {
      const double r = p.sx / 2;
      s.tube(p.cx, p.cy, r, p.h, p.sem, inst, tint);
      s.disk(p.cx, p.cy, p.h, r, p.sem, inst, tint);
    } else {
      const auto f = p.fp();
      const Vec3 ex(p.sx, 0, 0), ey(0, p.sy, 0), ez(0, 0, p.h);
      s.rect(Vec3(f.x0, f.y0, p.h), ex, ey, p.sem, inst, tint);   // top
      s.rect(Vec3(f.x0, f.y0, 0), ex, ez, p.sem, inst, tint);     // -y side
      s.rect(Vec3(f.x0, f.y1, 0), ex, ez, p.sem, inst, tint);     // +y side
      s.rect(Vec3(f.x0, f.y0, 0), ey, ez, p.sem, inst, tint);     // -x side
      s.rect(Vec3(f.x1, f.y0, 0), ey, ez, p.sem, inst, tint);     // +x side
    }
    ++inst;
  }
  return scene;
}

ImbalanceReport imbalance_report(const Scene& scene) {
  if (scene.empty()) throw Error("imbalance_report: empty scene");
  const auto C = static_cast<std::size_t>(scene.num_classes);
  ImbalanceReport r;
  r.points.assign(C, 0);
  r.instances.assign(C, 0);
  std::vector<std::pair<int, int>> seen;
  for (const auto& p : scene.points) {
    ++r.points.at(static_cast<std::size_t>(p.sem));
    seen.emplace_back(p.inst, p.sem);
  }
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  for (const auto& [inst, sem] : seen) ++r.instances[static_cast<std::size_t>(sem)];
  const double np = static_cast<double>(scene.size());
  const double ni = static_cast<double>(seen.size());
  for (std::size_t c = 0; c < C; ++c) {
    r.point_freq.push_back(static_cast<double>(r.points[c]) / np);
    r.instance_freq.push_back(static_cast<double>(r.instances[c]) / ni);
  }
  return r;
}

}  // namespace saso::synth
