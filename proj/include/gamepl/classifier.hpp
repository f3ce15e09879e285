// Copyright 2026 The gamepl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Desk-scale network player: a linear layer, or one tanh hidden layer, with
// per-class sigmoid outputs. Forward and backward passes are written out by
// hand.
//
// Gradient convention: `backward` receives d loss / d pred, where pred is
// the post-sigmoid probability, so losses do not need to know about logits.

#ifndef GAMEPL_CLASSIFIER_HPP_
#define GAMEPL_CLASSIFIER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "gamepl/errors.hpp"
#include "gamepl/matrix.hpp"
#include "gamepl/numerics.hpp"

namespace gamepl {

enum class Arch { Linear, Mlp };

struct DenseLayer {
  Matrix weights;  // out x in
  std::vector<double> bias;

  std::size_t out_dim() const noexcept { return weights.rows(); }
  std::size_t in_dim() const noexcept { return weights.cols(); }
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct ClassifierModel {
  Arch arch = Arch::Linear;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::size_t hidden_dim = 0;  // Mlp only
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }
  friend bool operator==(const ClassifierModel&, const ClassifierModel&) = default;
};

inline std::string to_string(Arch a) { return a == Arch::Linear ? "linear" : "mlp"; }

namespace detail {

// Uniform in [lo, hi) from the top 53 bits; independent of the standard
// library's distribution implementation.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline DenseLayer make_layer(std::size_t out, std::size_t in, std::mt19937_64& rng) {
  DenseLayer l{Matrix(out, in), std::vector<double>(out, 0.0)};
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& w : l.weights.flat()) w = uniform(rng, -bound, bound);
  return l;
}

inline DenseLayer zeros_like(const DenseLayer& l) {
  return {Matrix(l.out_dim(), l.in_dim()), std::vector<double>(l.out_dim(), 0.0)};
}

}  // namespace detail

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) from a mt19937_64 stream
/// seeded with `seed`; biases zero.
inline ClassifierModel init_model(Arch arch, std::size_t input_dim,
                                  std::size_t num_classes, std::uint64_t seed,
                                  std::size_t hidden_dim = 32) {
  if (input_dim < 1 || num_classes < 1 || (arch == Arch::Mlp && hidden_dim < 1))
    throw ArgumentError("init_model: dimensions must be >= 1");
  std::mt19937_64 rng(seed);
  ClassifierModel m;
  m.arch = arch;
  m.input_dim = input_dim;
  m.num_classes = num_classes;
  if (arch == Arch::Linear) {
    m.layers.push_back(detail::make_layer(num_classes, input_dim, rng));
  } else {
    m.hidden_dim = hidden_dim;
    m.layers.push_back(detail::make_layer(hidden_dim, input_dim, rng));
    m.layers.push_back(detail::make_layer(num_classes, hidden_dim, rng));
  }
  return m;
}

// Activations kept for the backward pass. `hidden` is empty for Linear.
struct ForwardCache {
  Matrix hidden;
  Matrix output;
};

namespace detail {

inline void affine_row(const DenseLayer& l, std::span<const double> x,
                       std::span<double> z) {
  for (std::size_t o = 0; o < l.out_dim(); ++o) {
    const auto w = l.weights.row(o);
    double acc = l.bias[o];
    for (std::size_t k = 0; k < x.size(); ++k) acc += w[k] * x[k];
    z[o] = acc;
  }
}

}  // namespace detail

inline ForwardCache forward_cached(const ClassifierModel& model, const Matrix& features) {
  if (features.cols() != model.input_dim)
    throw DimensionError("forward: feature width " + std::to_string(features.cols()) +
                         " but model input_dim " + std::to_string(model.input_dim));
  ForwardCache c;
  const std::size_t n = features.rows();
  c.output = Matrix(n, model.num_classes);
  if (model.arch == Arch::Mlp) {
    c.hidden = Matrix(n, model.hidden_dim);
    for (std::size_t i = 0; i < n; ++i) {
      auto h = c.hidden.row(i);
      detail::affine_row(model.layers[0], features.row(i), h);
      for (double& v : h) v = std::tanh(v);
      detail::affine_row(model.layers[1], h, c.output.row(i));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      detail::affine_row(model.layers[0], features.row(i), c.output.row(i));
  }
  for (double& v : c.output.flat()) v = sigmoid(v);
  return c;
}

/// Per-class probabilities, batch x num_classes.
inline Matrix forward(const ClassifierModel& model, const Matrix& features) {
  return forward_cached(model, features).output;
}

struct Gradients {
  std::vector<DenseLayer> layers;  // same shapes as the model's layers
  Matrix input;                    // d loss / d features

  void zero_layer(std::size_t k) {
    layers[k].weights.fill(0.0);
    std::fill(layers[k].bias.begin(), layers[k].bias.end(), 0.0);
  }
};

// Rows are processed in fixed-size chunks whose partial sums are added in
// chunk order, so results do not depend on the number of workers.
inline constexpr std::size_t kBackwardChunkRows = 8;

/// Chain-rule gradients of a loss whose derivative with respect to the
/// predictions is `upstream`.
inline Gradients backward(const ClassifierModel& model, const Matrix& features,
                          const ForwardCache& cache, const Matrix& upstream,
                          int workers = 1) {
  if (features.cols() != model.input_dim)
    throw DimensionError("backward: feature width mismatch");
  if (!upstream.same_shape(features.rows(), model.num_classes) ||
      !cache.output.same_shape(upstream))
    throw DimensionError("backward: upstream gradient must be " +
                         std::to_string(features.rows()) + "x" +
                         std::to_string(model.num_classes));
  const std::size_t n = features.rows();
  const bool mlp = model.arch == Arch::Mlp;
  const std::size_t chunks = (n + kBackwardChunkRows - 1) / kBackwardChunkRows;

  Gradients g;
  for (const auto& l : model.layers) g.layers.push_back(detail::zeros_like(l));
  g.input = Matrix(n, model.input_dim);
  std::vector<std::vector<DenseLayer>> partial(chunks);

  auto run_chunk = [&](std::size_t c) {
    auto& acc = partial[c];
    for (const auto& l : model.layers) acc.push_back(detail::zeros_like(l));
    const std::size_t begin = c * kBackwardChunkRows;
    const std::size_t end = std::min(n, begin + kBackwardChunkRows);
    const DenseLayer& top = model.layers.back();
    DenseLayer& gtop = acc.back();
    std::vector<double> dz(model.num_classes), dh(model.hidden_dim);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t o = 0; o < model.num_classes; ++o) {
        const double p = cache.output(i, o);
        dz[o] = upstream(i, o) * p * (1.0 - p);
      }
      const auto x_top = mlp ? cache.hidden.row(i) : features.row(i);
      for (std::size_t o = 0; o < model.num_classes; ++o) {
        auto gw = gtop.weights.row(o);
        for (std::size_t k = 0; k < x_top.size(); ++k) gw[k] += dz[o] * x_top[k];
        gtop.bias[o] += dz[o];
      }
      auto gin = g.input.row(i);
      if (!mlp) {
        for (std::size_t o = 0; o < model.num_classes; ++o) {
          const auto w = top.weights.row(o);
          for (std::size_t k = 0; k < gin.size(); ++k) gin[k] += dz[o] * w[k];
        }
        continue;
      }
      std::fill(dh.begin(), dh.end(), 0.0);
      for (std::size_t o = 0; o < model.num_classes; ++o) {
        const auto w = top.weights.row(o);
        for (std::size_t k = 0; k < dh.size(); ++k) dh[k] += dz[o] * w[k];
      }
      const auto h = cache.hidden.row(i);
      for (std::size_t k = 0; k < dh.size(); ++k) dh[k] *= 1.0 - h[k] * h[k];
      const DenseLayer& bottom = model.layers[0];
      DenseLayer& gbottom = acc[0];
      const auto x = features.row(i);
      for (std::size_t k = 0; k < dh.size(); ++k) {
        auto gw = gbottom.weights.row(k);
        for (std::size_t d = 0; d < x.size(); ++d) gw[d] += dh[k] * x[d];
        gbottom.bias[k] += dh[k];
        const auto w = bottom.weights.row(k);
        for (std::size_t d = 0; d < gin.size(); ++d) gin[d] += dh[k] * w[d];
      }
    }
  };

  const std::size_t nw = std::min<std::size_t>(std::max(workers, 1), std::max<std::size_t>(chunks, 1));
  if (nw <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < nw; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t c = w; c < chunks; c += nw) run_chunk(c);
      });
  }

  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t k = 0; k < g.layers.size(); ++k) {
      auto dst = g.layers[k].weights.flat();
      auto src = partial[c][k].weights.flat();
      for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += src[t];
      for (std::size_t t = 0; t < g.layers[k].bias.size(); ++t)
        g.layers[k].bias[t] += partial[c][k].bias[t];
    }
  }
  return g;
}

inline Gradients backward(const ClassifierModel& model, const Matrix& features,
                          const Matrix& upstream, int workers = 1) {
  return backward(model, features, forward_cached(model, features), upstream, workers);
}

// Heavy-ball SGD: v <- momentum * v + g;  theta <- theta - lr * v.
class SgdMomentum {
 public:
  SgdMomentum() = default;
  SgdMomentum(const ClassifierModel& model, double momentum) : momentum_(momentum) {
    for (const auto& l : model.layers) velocity_.push_back(detail::zeros_like(l));
  }

  void step(ClassifierModel& model, const Gradients& grads, double lr) {
    if (velocity_.size() != model.layers.size() || grads.layers.size() != model.layers.size())
      throw DimensionError("sgd_step: gradient layout does not match model");
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
      auto w = model.layers[k].weights.flat();
      auto v = velocity_[k].weights.flat();
      auto g = grads.layers[k].weights.flat();
      if (w.size() != g.size()) throw DimensionError("sgd_step: layer shape mismatch");
      for (std::size_t t = 0; t < w.size(); ++t) {
        v[t] = momentum_ * v[t] + g[t];
        w[t] -= lr * v[t];
      }
      auto& b = model.layers[k].bias;
      auto& vb = velocity_[k].bias;
      const auto& gb = grads.layers[k].bias;
      for (std::size_t t = 0; t < b.size(); ++t) {
        vb[t] = momentum_ * vb[t] + gb[t];
        b[t] -= lr * vb[t];
      }
    }
  }

 private:
  double momentum_ = 0.0;
  std::vector<DenseLayer> velocity_;
};

/// One plain gradient step (momentum 0, fresh state).
inline void sgd_step(ClassifierModel& model, const Gradients& grads, double lr) {
  SgdMomentum opt(model, 0.0);
  opt.step(model, grads, lr);
}

/// Root-mean-square difference between the parameters of two models of the
/// same layout.
inline double parameter_rms_distance(const ClassifierModel& a, const ClassifierModel& b) {
  if (a.layers.size() != b.layers.size()) throw DimensionError("model layout mismatch");
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    auto wa = a.layers[k].weights.flat();
    auto wb = b.layers[k].weights.flat();
    if (wa.size() != wb.size()) throw DimensionError("model layout mismatch");
    for (std::size_t t = 0; t < wa.size(); ++t) ss += (wa[t] - wb[t]) * (wa[t] - wb[t]);
    for (std::size_t t = 0; t < a.layers[k].bias.size(); ++t) {
      const double d = a.layers[k].bias[t] - b.layers[k].bias[t];
      ss += d * d;
    }
    n += wa.size() + a.layers[k].bias.size();
  }
  return n ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
}

// Checkpoint format: JSON object
//   {"format": "gamepl-model-v1", "arch": "linear"|"mlp", "input_dim": d,
//    "num_classes": L, "hidden_dim": H,
//    "layers": [{"rows": r, "cols": c, "weights": [...], "bias": [...]}]}
// Doubles are written in shortest round-trip form, so reloads are exact.
inline nlohmann::json model_to_json(const ClassifierModel& m) {
  nlohmann::json j;
  j["format"] = "gamepl-model-v1";
  j["arch"] = to_string(m.arch);
  j["input_dim"] = m.input_dim;
  j["num_classes"] = m.num_classes;
  j["hidden_dim"] = m.hidden_dim;
  j["layers"] = nlohmann::json::array();
  for (const auto& l : m.layers) {
    nlohmann::json jl;
    jl["rows"] = l.out_dim();
    jl["cols"] = l.in_dim();
    jl["weights"] = std::vector<double>(l.weights.flat().begin(), l.weights.flat().end());
    jl["bias"] = l.bias;
    j["layers"].push_back(std::move(jl));
  }
  return j;
}

inline ClassifierModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "gamepl-model-v1")
      throw ParseError(0, "unsupported model format");
    ClassifierModel m;
    const std::string arch = j.at("arch");
    if (arch == "linear") m.arch = Arch::Linear;
    else if (arch == "mlp") m.arch = Arch::Mlp;
    else throw ParseError(0, "unknown arch '" + arch + "'");
    m.input_dim = j.at("input_dim");
    m.num_classes = j.at("num_classes");
    m.hidden_dim = j.at("hidden_dim");
    for (const auto& jl : j.at("layers")) {
      const std::size_t rows = jl.at("rows"), cols = jl.at("cols");
      DenseLayer l{Matrix(rows, cols), jl.at("bias").get<std::vector<double>>()};
      const auto w = jl.at("weights").get<std::vector<double>>();
      if (w.size() != rows * cols || l.bias.size() != rows)
        throw ParseError(0, "layer parameter count mismatch");
      std::copy(w.begin(), w.end(), l.weights.flat().begin());
      m.layers.push_back(std::move(l));
    }
    const std::size_t expected = m.arch == Arch::Linear ? 1 : 2;
    if (m.layers.size() != expected || m.layers.front().in_dim() != m.input_dim ||
        m.layers.back().out_dim() != m.num_classes ||
        (m.arch == Arch::Mlp && (m.layers[0].out_dim() != m.hidden_dim ||
                                 m.layers[1].in_dim() != m.hidden_dim)))
      throw ParseError(0, "layer shapes inconsistent with declared dimensions");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("model checkpoint: ") + e.what());
  }
}

inline void save_model(const ClassifierModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << model_to_json(m).dump(1) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline ClassifierModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("model checkpoint: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace gamepl

#endif  // GAMEPL_CLASSIFIER_HPP_
