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

// Alternating best-response training. Each epoch:
//   1. scheduler weights xi are computed from the current pseudo labels and
//      the progress fraction;
//   2. the network takes mini-batch gradient steps on its objective;
//   3. right after each step the batch is re-predicted and the pseudo-label
//      player moves the latent values of that batch's images.
// Training ends after `epochs` epochs or once both players' per-epoch moves
// stay below `tolerance` for `patience` consecutive epochs.

#ifndef GAMEPL_GAME_TRAINER_HPP_
#define GAMEPL_GAME_TRAINER_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gamepl/classifier.hpp"
#include "gamepl/data.hpp"
#include "gamepl/errors.hpp"
#include "gamepl/evaluation.hpp"
#include "gamepl/network_losses.hpp"
#include "gamepl/numerics.hpp"
#include "gamepl/pseudo_player.hpp"
#include "gamepl/scheduler.hpp"

namespace gamepl {

enum class LossKind { G2NetPL, BceFull, An, AnLs, Wan, Epr };

inline std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::G2NetPL: return "g2netpl";
    case LossKind::BceFull: return "bce";
    case LossKind::An: return "an";
    case LossKind::AnLs: return "an-ls";
    case LossKind::Wan: return "wan";
    case LossKind::Epr: return "epr";
  }
  return "?";
}

inline BaselineKind baseline_of(LossKind k) {
  switch (k) {
    case LossKind::BceFull: return BaselineKind::BceFull;
    case LossKind::An: return BaselineKind::An;
    case LossKind::AnLs: return BaselineKind::AnLs;
    case LossKind::Wan: return BaselineKind::Wan;
    case LossKind::Epr: return BaselineKind::Epr;
    default: throw ArgumentError("g2netpl is not a baseline loss");
  }
}

enum class TrainingMode { EndToEnd, LinearInit };

struct TrainConfig {
  LossKind loss = LossKind::G2NetPL;

  // Pseudo-label player.
  MappingSpec mapping{MappingKind::GaussianCdf, 0.3};
  LambdaSchedule lambda{1.0, 0.2};
  AceVariant ace_variant = AceVariant::Additive;
  double eta_u = 0.1;
  int pseudo_steps = 1;
  bool pseudo_full_solve = false;  // jump to the exact per-entry minimizer
  bool end_of_epoch_pass = false;  // extra full-set pseudo update per epoch
  bool freeze_pseudo = false;      // network-only sanity mode

  // Scheduler.
  double beta = 0.7;
  double gamma = 1.0;

  // Network player.
  Arch arch = Arch::Linear;
  std::size_t hidden_dim = 32;
  double lr = 0.01;
  double lr_decay = 1.0;  // lr at epoch e is lr * lr_decay^e
  double momentum = 0.9;
  int epochs = 10;
  int batch_size = 16;
  PositivesRegularizer reg{};
  double ls_eps = 0.1;
  TrainingMode mode = TrainingMode::EndToEnd;
  int phase1_epochs = 0;  // LinearInit: epochs with only the last layer trainable

  // Convergence and safety.
  double tolerance = 1e-4;
  int patience = 2;
  bool stop_on_convergence = true;
  double divergence_factor = 10.0;

  std::uint64_t seed = 0;
  int workers = 1;

  SchedulerParams scheduler() const { return {beta, gamma, epochs}; }

  void validate() const {
    mapping.validate();
    lambda.validate();
    scheduler().validate();
    if (!(lr >= 0.0 && std::isfinite(lr))) throw ArgumentError("lr must be >= 0");
    if (!(lr_decay > 0.0)) throw ArgumentError("lr_decay must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("momentum must lie in [0,1)");
    if (!(eta_u >= 0.0 && std::isfinite(eta_u))) throw ArgumentError("eta_u must be >= 0");
    if (pseudo_steps < 1) throw ArgumentError("pseudo_steps must be >= 1");
    if (epochs < 1) throw ArgumentError("epochs must be >= 1");
    if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
    if (patience < 1) throw ArgumentError("patience must be >= 1");
    if (!(divergence_factor > 0.0)) throw ArgumentError("divergence_factor must be > 0");
    if (!(ls_eps >= 0.0 && ls_eps < 0.5)) throw ArgumentError("ls_eps must lie in [0, 0.5)");
    if (mode == TrainingMode::LinearInit && (phase1_epochs < 0 || phase1_epochs > epochs))
      throw ArgumentError("phase1_epochs must lie in [0, epochs]");
  }
};

struct TrainResult {
  ClassifierModel model;
  std::optional<PseudoLabelStore> pseudo;  // G2NetPL only; rows follow train_rows
  std::vector<TraceRecord> traces;
  int converged_epoch = -1;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

namespace detail {

struct TrainView {
  Matrix features;
  ObservationMask mask;
  LabelMatrix gt;
};

inline TrainView view_rows(const PartialDataset& ds, const std::vector<std::size_t>& rows) {
  return {ds.features.gather_rows(rows), ds.mask.gather_rows(rows),
          ds.ground_truth.gather_rows(rows)};
}

inline Matrix xi_weights(const PseudoLabelStore& store, double phi,
                         const SchedulerParams& sched) {
  Matrix w(store.images(), store.classes());
  for (std::size_t i = 0; i < store.images(); ++i)
    for (std::size_t j = 0; j < store.classes(); ++j)
      if (!store.is_frozen(i, j)) w(i, j) = xi(store.mapped()(i, j), phi, sched);
  return w;
}

struct LossParts {
  double total = 0.0, obs = 0.0, unobs = 0.0;
  Matrix grad;
};

inline LossParts network_loss(const TrainConfig& cfg, const Matrix& preds,
                              const ObservationMask& mask, const LabelMatrix& gt,
                              const Matrix* pseudo, const Matrix* xi_w) {
  if (cfg.loss == LossKind::G2NetPL) {
    LossReport r = loss_g2netpl(preds, mask, *pseudo, *xi_w, cfg.reg);
    return {r.total, r.obs_part, r.unobs_part, std::move(r.grad)};
  }
  BaselineParams bp{cfg.ls_eps, cfg.reg};
  LossValue v = baseline_loss(baseline_of(cfg.loss), preds, mask, &gt, bp);
  return {v.value, v.value, 0.0, std::move(v.grad)};
}

}  // namespace detail

/// Runs the game on the train split of `dataset` (whose mask is already the
/// partial annotation). Deterministic for a given config and seed.
inline TrainResult train(const PartialDataset& dataset, const TrainConfig& cfg) {
  cfg.validate();
  TrainResult res;
  res.train_rows = dataset.train_rows();
  res.test_rows = dataset.test_rows();
  if (res.train_rows.empty()) throw ArgumentError("train: dataset has no train rows");

  const auto tv = detail::view_rows(dataset, res.train_rows);
  const Matrix test_x = dataset.features.gather_rows(res.test_rows);
  const LabelMatrix test_gt = dataset.ground_truth.gather_rows(res.test_rows);
  const std::size_t n = res.train_rows.size();
  const bool game = cfg.loss == LossKind::G2NetPL;
  const SchedulerParams sched = cfg.scheduler();

  res.model = init_model(cfg.arch, dataset.input_dim(), dataset.num_classes(), cfg.seed,
                         cfg.hidden_dim);
  if (game) res.pseudo.emplace(tv.mask, cfg.mapping);
  SgdMomentum opt(res.model, cfg.momentum);
  detail::Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const PseudoUpdateOptions pseudo_opt{cfg.eta_u, cfg.pseudo_steps, cfg.ace_variant,
                                       cfg.workers};
  bool any_unobserved = false;
  for (Obs o : tv.mask.flat()) any_unobserved = any_unobserved || o == Obs::Unobserved;

  auto move_pseudo = [&](std::span<const std::size_t> rows, const Matrix& preds) {
    if (cfg.pseudo_full_solve) {
      for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t j = 0; j < preds.cols(); ++j)
          if (!res.pseudo->is_frozen(rows[r], j))
            res.pseudo->set_latent(rows[r], j,
                                   solve_pseudo_exact(preds(r, j),
                                                      lambda_at(preds(r, j), cfg.lambda),
                                                      cfg.mapping, cfg.ace_variant, 2001),
                                   cfg.mapping);
      return;
    }
    update_pseudo_rows(*res.pseudo, rows, preds, cfg.lambda, cfg.mapping, pseudo_opt);
  };

  auto full_loss = [&](const Matrix& xi_w) {
    const Matrix preds = forward(res.model, tv.features);
    return detail::network_loss(cfg, preds, tv.mask, tv.gt,
                                game ? &res.pseudo->mapped() : nullptr, &xi_w);
  };

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // Divergence reference: the starting point scored under the current epoch's weights.
  const ClassifierModel initial_model = res.model;
  const Matrix initial_pseudo = game ? res.pseudo->mapped() : Matrix();
  const Matrix initial_preds = forward(initial_model, tv.features);
  int streak = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double phi = progress(epoch, sched);
    const Matrix xi_w = game ? detail::xi_weights(*res.pseudo, phi, sched) : Matrix();
    const double initial_loss =
        detail::network_loss(cfg, initial_preds, tv.mask, tv.gt,
                             game ? &initial_pseudo : nullptr, &xi_w)
            .total;

    const double lr = cfg.lr * std::pow(cfg.lr_decay, epoch);
    const bool last_layer_only =
        cfg.mode == TrainingMode::LinearInit && epoch < cfg.phase1_epochs;
    const ClassifierModel model_before = res.model;
    const Matrix pseudo_before = game ? res.pseudo->mapped() : Matrix();

    rng.shuffle(order);
    for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t e = std::min(n, b + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const std::size_t> rows(order.data() + b, e - b);
      const Matrix x = tv.features.gather_rows(rows);
      const ForwardCache cache = forward_cached(res.model, x);
      const ObservationMask m = tv.mask.gather_rows(rows);
      const LabelMatrix g = tv.gt.gather_rows(rows);
      Matrix pseudo_b, xi_b;
      if (game) {
        pseudo_b = res.pseudo->mapped().gather_rows(rows);
        xi_b = xi_w.gather_rows(rows);
      }
      auto loss = detail::network_loss(cfg, cache.output, m, g, &pseudo_b, &xi_b);
      const double scale = 1.0 / static_cast<double>(rows.size());
      for (double& v : loss.grad.flat()) v *= scale;
      Gradients grads = backward(res.model, x, cache, loss.grad, cfg.workers);
      if (last_layer_only)
        for (std::size_t k = 0; k + 1 < grads.layers.size(); ++k) grads.zero_layer(k);
      opt.step(res.model, grads, lr);

      if (game && !cfg.freeze_pseudo) move_pseudo(rows, forward(res.model, x));
    }
    if (game && !cfg.freeze_pseudo && cfg.end_of_epoch_pass) {
      std::vector<std::size_t> all(n);
      for (std::size_t i = 0; i < n; ++i) all[i] = i;
      move_pseudo(all, forward(res.model, tv.features));
    }

    TraceRecord rec;
    rec.epoch = epoch + 1;
    const auto lp = full_loss(xi_w);
    rec.loss_total = lp.total;
    rec.loss_obs = lp.obs;
    rec.loss_unobs = lp.unobs;
    rec.theta_delta_norm = parameter_rms_distance(res.model, model_before);
    if (game) {
      double conf = 0.0, delta = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < res.pseudo->classes(); ++j) {
          if (res.pseudo->is_frozen(i, j)) continue;
          const double u = res.pseudo->mapped()(i, j);
          conf += std::abs(2.0 * u - 1.0);
          delta += (u - pseudo_before(i, j)) * (u - pseudo_before(i, j));
          ++count;
        }
      if (count) {
        rec.pseudo_confidence_mean = conf / static_cast<double>(count);
        rec.pseudo_delta_norm = std::sqrt(delta / static_cast<double>(count));
      }
      if (any_unobserved) {
        try {
          rec.pseudo_map = pseudo_label_quality(*res.pseudo, tv.gt, tv.mask).map;
        } catch (const UndefinedApError&) {
        }
      }
    }
    if (!res.test_rows.empty()) {
      try {
        rec.map_test = map_score(forward(res.model, test_x), test_gt).map;
      } catch (const UndefinedApError&) {
      }
    }
    res.traces.push_back(rec);

    if (!std::isfinite(rec.loss_total))
      throw DivergedError(rec.epoch, "non-finite training loss");
    if (initial_loss > 0.0 && rec.loss_total > cfg.divergence_factor * initial_loss)
      throw DivergedError(rec.epoch, "loss " + std::to_string(rec.loss_total) +
                                         " exceeds " + std::to_string(cfg.divergence_factor) +
                                         "x the initial " + std::to_string(initial_loss));

    streak = nash_residual(rec) < cfg.tolerance ? streak + 1 : 0;
    if (streak >= cfg.patience && res.converged_epoch < 0) {
      res.converged_epoch = rec.epoch;
      if (cfg.stop_on_convergence) break;
    }
  }
  return res;
}

}  // namespace gamepl

#endif  // GAMEPL_GAME_TRAINER_HPP_
