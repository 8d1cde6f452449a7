#include "saso/net.hpp"

#include <cmath>
#include <random>

#include "saso/error.hpp"

namespace saso::net {
namespace {

std::size_t layer_count(const NetShape& s) { return s.trunk.size(); }

void check_shape(const NetShape& s) {
  if (s.classes <= 0 || s.embed <= 0) throw Error("classes and embed must be positive");
  if (s.free_mode) {
    if (s.free_points <= 0) throw Error("free mode needs a positive point count");
    return;
  }
  if (s.input <= 0) throw Error("input width must be positive");
  for (int w : s.trunk) {
    if (w <= 0) throw Error("trunk widths must be positive");
  }
}

std::vector<std::pair<int, int>> tensor_shapes(const NetShape& s) {
  std::vector<std::pair<int, int>> out;
  if (s.free_mode) {
    out.emplace_back(s.free_points, s.classes);
    out.emplace_back(s.free_points, s.embed);
    return out;
  }
  int in = s.input;
  for (int w : s.trunk) {
    out.emplace_back(in, w);
    out.emplace_back(1, w);
    in = w;
  }
  out.emplace_back(in, s.classes);
  out.emplace_back(1, s.classes);
  out.emplace_back(in, s.embed);
  out.emplace_back(1, s.embed);
  return out;
}

}  // namespace

std::size_t NetParams::num_parameters() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
  return n;
}

NetParams zero_params(const NetShape& shape) {
  check_shape(shape);
  NetParams p;
  p.shape = shape;
  for (auto [r, c] : tensor_shapes(shape)) p.tensors.push_back(Matrix::Zero(r, c));
  return p;
}

NetParams init_params(const NetShape& shape, std::uint64_t seed) {
  NetParams p = zero_params(shape);
  std::mt19937_64 rng(seed);
  if (shape.free_mode) {
    std::normal_distribution<double> d(0.0, 0.1);
    for (auto& t : p.tensors)
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = d(rng);
    return p;
  }
  // Weights sit at even slots; biases stay zero.
  for (std::size_t k = 0; k < p.tensors.size(); k += 2) {
    auto& w = p.tensors[k];
    const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> d(-a, a);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = d(rng);
  }
  return p;
}

NetParams free_mode_params(int num_points, int classes, int embed, std::uint64_t seed,
                           double init_std) {
  NetShape s;
  s.free_mode = true;
  s.free_points = num_points;
  s.classes = classes;
  s.embed = embed;
  s.trunk.clear();
  NetParams p = zero_params(s);
  if (init_std > 0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, init_std);
    for (auto& t : p.tensors)
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = d(rng);
  }
  return p;
}

Gradients zeros_like(const NetParams& params) {
  Gradients g;
  g.reserve(params.tensors.size());
  for (const auto& t : params.tensors) g.push_back(Matrix::Zero(t.rows(), t.cols()));
  return g;
}

ForwardResult forward(const NetParams& params, const Matrix& features) {
  const auto& s = params.shape;
  ForwardResult out;
  if (s.free_mode) {
    if (features.rows() != s.free_points) {
      throw Error("free-mode network expects " + std::to_string(s.free_points) + " rows, got " +
                  std::to_string(features.rows()));
    }
    out.logits = params.tensors[0];
    out.embeddings = params.tensors[1];
    return out;
  }
  if (features.cols() != s.input) {
    throw Error("feature width mismatch: expected " + std::to_string(s.input) + ", got " +
                std::to_string(features.cols()));
  }
  const std::size_t L = layer_count(s);
  out.trace.activations.reserve(L + 1);
  out.trace.pre_activations.reserve(L);
  out.trace.activations.push_back(features);
  for (std::size_t k = 0; k < L; ++k) {
    const auto& w = params.tensors[2 * k];
    const auto& b = params.tensors[2 * k + 1];
    Matrix z = out.trace.activations.back() * w;
    z.rowwise() += b.row(0);
    out.trace.activations.push_back(z.cwiseMax(0.0));
    out.trace.pre_activations.push_back(std::move(z));
  }
  const Matrix& top = out.trace.activations.back();
  out.logits = top * params.tensors[2 * L];
  out.logits.rowwise() += params.tensors[2 * L + 1].row(0);
  out.embeddings = top * params.tensors[2 * L + 2];
  out.embeddings.rowwise() += params.tensors[2 * L + 3].row(0);
  return out;
}

Gradients backward(const ForwardTrace& trace, const NetParams& params, const Matrix& dlogits,
                   const Matrix& dembeddings) {
  Gradients g = zeros_like(params);
  if (params.shape.free_mode) {
    g[0] = dlogits;
    g[1] = dembeddings;
    return g;
  }
  const std::size_t L = layer_count(params.shape);
  const Matrix& top = trace.activations.at(L);
  g[2 * L] = top.transpose() * dlogits;
  g[2 * L + 1] = dlogits.colwise().sum();
  g[2 * L + 2] = top.transpose() * dembeddings;
  g[2 * L + 3] = dembeddings.colwise().sum();

  Matrix da = dlogits * params.tensors[2 * L].transpose() +
              dembeddings * params.tensors[2 * L + 2].transpose();
  for (std::size_t k = L; k-- > 0;) {
    Matrix dz = (trace.pre_activations[k].array() > 0.0).select(da, 0.0);
    g[2 * k] = trace.activations[k].transpose() * dz;
    g[2 * k + 1] = dz.colwise().sum();
    if (k > 0) da = dz * params.tensors[2 * k].transpose();
  }
  return g;
}

void accumulate(Gradients& grads, const Gradients& other, double scale) {
  if (grads.size() != other.size()) throw Error("gradient layout mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += scale * other[i];
}

AdamState init_adam(const NetParams& params) {
  AdamState s;
  s.m = zeros_like(params);
  s.v = zeros_like(params);
  return s;
}

void adam_step(NetParams& params, const Gradients& grads, AdamState& state,
               const AdamConfig& cfg) {
  if (grads.size() != params.tensors.size() || state.m.size() != params.tensors.size()) {
    throw Error("adam: state/gradient layout mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    params.tensors[i].array() -=
        cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
  }
}

bool all_finite(const NetParams& params) {
  for (const auto& t : params.tensors)
    if (!t.allFinite()) return false;
  return true;
}

}  // namespace saso::net
