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

// Objectives of the network player. Every loss is a sum over the images of a
// batch and returns its gradient with respect to the post-sigmoid
// predictions; `classifier.hpp` turns that into parameter gradients.

#ifndef GAMEPL_NETWORK_LOSSES_HPP_
#define GAMEPL_NETWORK_LOSSES_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <utility>

#include "gamepl/errors.hpp"
#include "gamepl/matrix.hpp"
#include "gamepl/numerics.hpp"
#include "gamepl/observation.hpp"

namespace gamepl {

// Expected-positives regularizer: weight * (mean_j pred_j - k / L)^2 per
// image. Penalizes predicting many more positives than the expected count k.
// The exact regularizer of the original expected-positive method is not
// reproduced; this is a stand-in with the same intent.
struct PositivesRegularizer {
  double expected_positives = 1.0;
  double weight = 0.1;
};

struct LossValue {
  double value = 0.0;
  Matrix grad;  // d value / d pred, same shape as the predictions
};

struct LossReport {
  double total = 0.0;
  double obs_part = 0.0;
  double unobs_part = 0.0;
  Matrix grad;
};

namespace detail {

inline double add_regularizer(std::span<const double> pred, std::span<double> grad,
                              const PositivesRegularizer& reg) {
  if (reg.weight == 0.0 || pred.empty()) return 0.0;
  const double n = static_cast<double>(pred.size());
  double mean = 0.0;
  for (double p : pred) mean += p;
  mean /= n;
  const double dev = mean - reg.expected_positives / n;
  const double g = reg.weight * 2.0 * dev / n;
  for (double& gj : grad) gj += g;
  return reg.weight * dev * dev;
}

// Adds w * BCE(target, pred) for one entry.
inline double add_bce(double target, double pred, double w, double& grad) {
  grad += w * stable_bce_dq(target, pred);
  return w * stable_bce(target, pred);
}

}  // namespace detail

/// Cross-entropy on observed entries plus the positives regularizer.
inline LossValue loss_obs(const Matrix& preds, const ObservationMask& mask,
                          const PositivesRegularizer& reg) {
  require_same_shape(preds, mask, "loss_obs");
  LossValue out{0.0, Matrix(preds.rows(), preds.cols())};
  for (std::size_t i = 0; i < preds.rows(); ++i) {
    for (std::size_t j = 0; j < preds.cols(); ++j) {
      const Obs o = mask(i, j);
      if (o == Obs::Unobserved) continue;
      out.value += detail::add_bce(o == Obs::Positive ? 1.0 : 0.0, preds(i, j),
                                   1.0, out.grad(i, j));
    }
    out.value += detail::add_regularizer(preds.row(i), out.grad.row(i), reg);
  }
  return out;
}

/// xi-weighted cross-entropy between predictions and pseudo labels, over
/// unobserved entries only.
inline LossValue loss_unobs(const Matrix& preds, const Matrix& pseudo,
                            const ObservationMask& mask, const Matrix& xi_weights) {
  require_same_shape(preds, pseudo, "loss_unobs");
  require_same_shape(preds, mask, "loss_unobs");
  require_same_shape(preds, xi_weights, "loss_unobs");
  LossValue out{0.0, Matrix(preds.rows(), preds.cols())};
  for (std::size_t i = 0; i < preds.rows(); ++i)
    for (std::size_t j = 0; j < preds.cols(); ++j)
      if (mask(i, j) == Obs::Unobserved)
        out.value += detail::add_bce(pseudo(i, j), preds(i, j), xi_weights(i, j),
                                     out.grad(i, j));
  return out;
}

/// Network objective: observed part plus scheduled unobserved part.
inline LossReport loss_g2netpl(const Matrix& preds, const ObservationMask& mask,
                               const Matrix& pseudo, const Matrix& xi_weights,
                               const PositivesRegularizer& reg) {
  LossValue obs = loss_obs(preds, mask, reg);
  LossValue unobs = loss_unobs(preds, pseudo, mask, xi_weights);
  LossReport r;
  r.obs_part = obs.value;
  r.unobs_part = unobs.value;
  r.total = obs.value + unobs.value;
  r.grad = std::move(obs.grad);
  auto g = r.grad.flat();
  auto gu = unobs.grad.flat();
  for (std::size_t k = 0; k < g.size(); ++k) g[k] += gu[k];
  return r;
}

enum class BaselineKind { BceFull, An, AnLs, Wan, Epr };

struct BaselineParams {
  double ls_eps = 0.1;  // label smoothing for AnLs
  PositivesRegularizer reg{};
};

inline std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::BceFull: return "bce";
    case BaselineKind::An: return "an";
    case BaselineKind::AnLs: return "an-ls";
    case BaselineKind::Wan: return "wan";
    case BaselineKind::Epr: return "epr";
  }
  return "?";
}

/// Baseline objectives:
///  - BceFull: cross-entropy against the full ground truth (`full_labels`).
///  - An:      unobserved entries taken as negatives.
///  - AnLs:    An with targets smoothed to eps and 1 - eps.
///  - Wan:     An with every negative term weighted 1 / (L - 1).
///  - Epr:     observed entries only, plus the positives regularizer.
inline LossValue baseline_loss(BaselineKind kind, const Matrix& preds,
                               const ObservationMask& mask,
                               const LabelMatrix* full_labels,
                               const BaselineParams& params) {
  if (kind == BaselineKind::BceFull) {
    if (full_labels == nullptr)
      throw ArgumentError("bce baseline requires fully observed labels");
    require_same_shape(preds, *full_labels, "baseline_loss");
    LossValue out{0.0, Matrix(preds.rows(), preds.cols())};
    for (std::size_t i = 0; i < preds.rows(); ++i)
      for (std::size_t j = 0; j < preds.cols(); ++j)
        out.value += detail::add_bce((*full_labels)(i, j) ? 1.0 : 0.0, preds(i, j),
                                     1.0, out.grad(i, j));
    return out;
  }
  if (kind == BaselineKind::Epr) return loss_obs(preds, mask, params.reg);

  require_same_shape(preds, mask, "baseline_loss");
  const double eps = kind == BaselineKind::AnLs ? params.ls_eps : 0.0;
  const double neg_w = (kind == BaselineKind::Wan && preds.cols() > 1)
                           ? 1.0 / static_cast<double>(preds.cols() - 1)
                           : 1.0;
  LossValue out{0.0, Matrix(preds.rows(), preds.cols())};
  for (std::size_t i = 0; i < preds.rows(); ++i) {
    for (std::size_t j = 0; j < preds.cols(); ++j) {
      const bool positive = mask(i, j) == Obs::Positive;
      const double target = positive ? 1.0 - eps : eps;
      out.value += detail::add_bce(target, preds(i, j), positive ? 1.0 : neg_w,
                                   out.grad(i, j));
    }
  }
  return out;
}

}  // namespace gamepl

#endif  // GAMEPL_NETWORK_LOSSES_HPP_
