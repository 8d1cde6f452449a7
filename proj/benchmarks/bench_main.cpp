#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "saso/clustering.hpp"
#include "saso/net.hpp"
#include "saso/spatial.hpp"
#include "saso/synth.hpp"
#include "saso/trainer.hpp"
#include "saso/wfs.hpp"

namespace {

using namespace saso;

std::vector<Vec3> cloud(std::size_t n, double extent, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, extent);
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng) * 0.3);
  return pts;
}

void BM_GridBuild(benchmark::State& state) {
  const auto pts = cloud(static_cast<std::size_t>(state.range(0)), 5.0, 1);
  for (auto _ : state) {
    GridIndex index(pts, 0.2);
    benchmark::DoNotOptimize(index.occupied_cells());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GridBuild)->Arg(10000)->Arg(100000);

void BM_BallQuery(benchmark::State& state) {
  const auto pts = cloud(100000, 5.0, 2);
  const GridIndex index(pts, 0.2);
  const double radius = static_cast<double>(state.range(0)) / 100.0;
  std::size_t i = 0, found = 0;
  for (auto _ : state) {
    found += index.ball_query_point(i, radius).size();
    i = (i + 7919) % pts.size();
  }
  benchmark::DoNotOptimize(found);
}
BENCHMARK(BM_BallQuery)->Arg(10)->Arg(20)->Arg(50);

void BM_MeanShift(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(0, 0.15);
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Eigen::MatrixXd emb(n, 5);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) emb(i, j) = d(rng) + 3.0 * static_cast<double>((i % 6) == j);
  const clustering::MeanShiftConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(clustering::mean_shift(emb, cfg, 0).num_clusters);
}
BENCHMARK(BM_MeanShift)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_NetForwardBackward(benchmark::State& state) {
  net::NetShape shape;
  shape.classes = 8;
  const auto params = net::init_params(shape, 4);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Eigen::MatrixXd x(n, shape.input);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  const Eigen::MatrixXd dl = Eigen::MatrixXd::Constant(n, shape.classes, 1e-3);
  const Eigen::MatrixXd de = Eigen::MatrixXd::Constant(n, shape.embed, 1e-3);
  for (auto _ : state) {
    const auto fwd = net::forward(params, x);
    benchmark::DoNotOptimize(net::backward(fwd.trace, params, dl, de));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NetForwardBackward)->Arg(512)->Arg(4096)->Unit(benchmark::kMicrosecond);

void BM_WaterFill(benchmark::State& state) {
  const std::vector<double> op = {0.3, 0.25, 0.15, 0.1, 0.08, 0.05, 0.04, 0.02, 0.01};
  const double delta = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(wfs::water_fill(op, delta).iterations);
}
BENCHMARK(BM_WaterFill)->Arg(1000)->Arg(10000);

void BM_InferScene(benchmark::State& state) {
  auto cfg = synth::default_config();
  cfg.seed = 6;
  const auto scene = synth::generate(cfg);
  net::NetShape shape;
  shape.input = kFeatureDim;
  shape.classes = scene.num_classes;
  const auto params = net::init_params(shape, 7);
  train::InferConfig ic;
  ic.cut.num_points = 512;
  for (auto _ : state) benchmark::DoNotOptimize(train::infer(scene, params, ic).inst.size());
  state.counters["points"] = static_cast<double>(scene.size());
}
BENCHMARK(BM_InferScene)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
