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

// The pseudo-label player. Each unobserved (image, class) entry owns a
// latent real value whose image under F is a soft pseudo label. The player
// minimizes the augmented cross-entropy
//
//   sum_j  L(pred_j, F(y_j)) + lambda_j F(y_j) (1 - F(y_j))      (additive)
//   sum_j  exp(lambda_j F(y_j) (1 - F(y_j))) L(pred_j, F(y_j))   (exponential)
//
// where pred_j is the network's current prediction. The first term keeps the
// pseudo label near the prediction; the second pushes it toward 0 or 1.

#ifndef GAMEPL_PSEUDO_PLAYER_HPP_
#define GAMEPL_PSEUDO_PLAYER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gamepl/errors.hpp"
#include "gamepl/matrix.hpp"
#include "gamepl/observation.hpp"
#include "gamepl/numerics.hpp"

namespace gamepl {

enum class AceVariant { Additive, Exponential };

// lambda_j as a Gaussian bump in the prediction: largest where the network is
// least decided (pred = 0.5). An infinite width gives a constant lambda_max.
struct LambdaSchedule {
  double lambda_max = 1.0;
  double width = 0.2;

  static LambdaSchedule constant(double value) {
    return {value, std::numeric_limits<double>::infinity()};
  }

  void validate() const {
    if (!(lambda_max >= 0.0 && std::isfinite(lambda_max)))
      throw ArgumentError("lambda_max must be finite and >= 0");
    if (!(width > 0.0)) throw ArgumentError("lambda width must be > 0");
  }
};

inline double lambda_at(double pred, const LambdaSchedule& lam) noexcept {
  if (std::isinf(lam.width)) return lam.lambda_max;
  const double d = pred - 0.5;
  return lam.lambda_max * std::exp(-d * d / (2.0 * lam.width * lam.width));
}

// Per-entry objective of the pseudo-label player.
inline double ace_term(double pred, double latent, double lambda,
                       const MappingSpec& spec,
                       AceVariant variant = AceVariant::Additive) {
  const double f = map_latent(latent, spec);
  const double penalty = lambda * f * (1.0 - f);
  if (variant == AceVariant::Exponential)
    return std::exp(penalty) * stable_bce(pred, f);
  return stable_bce(pred, f) + penalty;
}

/// Derivative of the additive term with respect to the latent value:
///   ((u - pred) / (u (1 - u)) + lambda - 2 lambda u) * F'(latent),
/// with u = F(latent) clamped away from {0, 1}.
inline double ace_grad(double pred, double latent, double lambda,
                       const MappingSpec& spec) {
  const double u = clamp_prob(map_latent(latent, spec));
  const double bracket = (u - pred) / (u * (1.0 - u)) + lambda - 2.0 * lambda * u;
  return bracket * map_latent_derivative(latent, spec);
}

/// Derivative of the exponential term with respect to the latent value.
inline double ace_grad_exp(double pred, double latent, double lambda,
                           const MappingSpec& spec) {
  const double f = map_latent(latent, spec);
  const double u = clamp_prob(f);
  const double amp = std::exp(lambda * f * (1.0 - f));
  const double bracket =
      lambda * (1.0 - 2.0 * f) * stable_bce(pred, f) + (u - pred) / (u * (1.0 - u));
  return amp * bracket * map_latent_derivative(latent, spec);
}

inline double ace_grad(double pred, double latent, double lambda,
                       const MappingSpec& spec, AceVariant variant) {
  return variant == AceVariant::Exponential
             ? ace_grad_exp(pred, latent, lambda, spec)
             : ace_grad(pred, latent, lambda, spec);
}

namespace detail {
inline void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw DimensionError(std::string(what) + ": length " + std::to_string(a) +
                         " vs " + std::to_string(b));
}
}  // namespace detail

/// Additive augmented cross-entropy summed over one image's classes.
inline double ace_loss(std::span<const double> pred, std::span<const double> latent,
                       const LambdaSchedule& lam, const MappingSpec& spec) {
  detail::require_same_length(pred.size(), latent.size(), "ace_loss");
  double total = 0.0;
  for (std::size_t j = 0; j < pred.size(); ++j)
    total += ace_term(pred[j], latent[j], lambda_at(pred[j], lam), spec);
  return total;
}

/// Exponential variant: the penalty amplifies the cross-entropy instead of
/// adding to it.
inline double ace_loss_exp(std::span<const double> pred,
                           std::span<const double> latent,
                           const LambdaSchedule& lam, const MappingSpec& spec) {
  detail::require_same_length(pred.size(), latent.size(), "ace_loss_exp");
  double total = 0.0;
  for (std::size_t j = 0; j < pred.size(); ++j)
    total += ace_term(pred[j], latent[j], lambda_at(pred[j], lam), spec,
                      AceVariant::Exponential);
  return total;
}

// Latent and mapped pseudo labels for every (image, class) entry. Frozen
// entries carry an observed label and never move.
class PseudoLabelStore {
 public:
  PseudoLabelStore() = default;

  // Observed positives freeze at 1, observed negatives at 0; everything else
  // starts at the latent centre, i.e. pseudo label 0.5.
  PseudoLabelStore(const ObservationMask& mask, const MappingSpec& spec)
      : latent_(mask.rows(), mask.cols()),
        mapped_(mask.rows(), mask.cols()),
        frozen_(mask.rows(), mask.cols(), 0) {
    spec.validate();
    const auto [lo, hi] = latent_bounds(spec);
    for (std::size_t i = 0; i < mask.rows(); ++i) {
      for (std::size_t j = 0; j < mask.cols(); ++j) {
        switch (mask(i, j)) {
          case Obs::Positive:
            latent_(i, j) = hi;
            mapped_(i, j) = 1.0;
            frozen_(i, j) = 1;
            break;
          case Obs::Negative:
            latent_(i, j) = lo;
            mapped_(i, j) = 0.0;
            frozen_(i, j) = 1;
            break;
          case Obs::Unobserved:
            latent_(i, j) = latent_center(spec);
            mapped_(i, j) = map_latent(latent_(i, j), spec);
            break;
        }
      }
    }
  }

  // Raw constructor, used when loading checkpoints.
  PseudoLabelStore(Matrix latent, Matrix mapped, LabelMatrix frozen)
      : latent_(std::move(latent)),
        mapped_(std::move(mapped)),
        frozen_(std::move(frozen)) {
    require_same_shape(latent_, mapped_, "PseudoLabelStore");
    require_same_shape(latent_, frozen_, "PseudoLabelStore");
  }

  std::size_t images() const noexcept { return latent_.rows(); }
  std::size_t classes() const noexcept { return latent_.cols(); }

  const Matrix& latent() const noexcept { return latent_; }
  const Matrix& mapped() const noexcept { return mapped_; }
  const LabelMatrix& frozen() const noexcept { return frozen_; }
  bool is_frozen(std::size_t i, std::size_t j) const { return frozen_(i, j) != 0; }

  // Moves one non-frozen entry and refreshes its mapped value.
  void set_latent(std::size_t i, std::size_t j, double y, const MappingSpec& spec) {
    if (is_frozen(i, j)) return;
    latent_(i, j) = clamp_latent(y, spec);
    mapped_(i, j) = map_latent(latent_(i, j), spec);
  }

  // Mask implied by the frozen flags: frozen 1 -> positive, frozen 0 ->
  // negative, otherwise unobserved.
  ObservationMask observation_mask() const {
    ObservationMask m(images(), classes(), Obs::Unobserved);
    for (std::size_t i = 0; i < images(); ++i)
      for (std::size_t j = 0; j < classes(); ++j)
        if (is_frozen(i, j))
          m(i, j) = mapped_(i, j) >= 0.5 ? Obs::Positive : Obs::Negative;
    return m;
  }

  friend bool operator==(const PseudoLabelStore&, const PseudoLabelStore&) = default;

 private:
  Matrix latent_;
  Matrix mapped_;
  LabelMatrix frozen_;
};

struct PseudoUpdateOptions {
  double eta = 0.1;  // step size on the latent
  int steps = 1;
  AceVariant variant = AceVariant::Additive;
  int workers = 1;  // images are partitioned across workers
};

/// Gradient steps on the latent values of the listed images. `preds` row r
/// holds the network prediction for image `images[r]`.
inline void update_pseudo_rows(PseudoLabelStore& store,
                               std::span<const std::size_t> images,
                               const Matrix& preds, const LambdaSchedule& lam,
                               const MappingSpec& spec,
                               const PseudoUpdateOptions& opt) {
  if (preds.rows() != images.size() || preds.cols() != store.classes())
    throw DimensionError("update_pseudo: predictions are " +
                         std::to_string(preds.rows()) + "x" +
                         std::to_string(preds.cols()) + ", expected " +
                         std::to_string(images.size()) + "x" +
                         std::to_string(store.classes()));
  if (!(opt.eta >= 0.0)) throw ArgumentError("update_pseudo: eta must be >= 0");
  if (opt.steps < 1) throw ArgumentError("update_pseudo: steps must be >= 1");
  for (std::size_t r = 0; r < images.size(); ++r)
    if (images[r] >= store.images())
      throw DimensionError("update_pseudo: image index out of range");

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const std::size_t i = images[r];
      for (std::size_t j = 0; j < store.classes(); ++j) {
        if (store.is_frozen(i, j)) continue;
        const double pred = preds(r, j);
        const double lambda = lambda_at(pred, lam);
        double y = store.latent()(i, j);
        for (int s = 0; s < opt.steps; ++s)
          y = clamp_latent(y - opt.eta * ace_grad(pred, y, lambda, spec, opt.variant),
                           spec);
        store.set_latent(i, j, y, spec);
      }
    }
  };

  const std::size_t n = images.size();
  const std::size_t workers =
      std::min<std::size_t>(std::max(opt.workers, 1), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    work(0, n);
    return;
  }
  // Each image belongs to exactly one worker, so the result does not depend
  // on the worker count.
  std::vector<std::jthread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk, e = std::min(n, b + chunk);
    if (b < e) pool.emplace_back(work, b, e);
  }
}

/// Updates every image of the store; `preds` is aligned with the store.
inline void update_pseudo(PseudoLabelStore& store, const Matrix& preds,
                          const LambdaSchedule& lam, const MappingSpec& spec,
                          const PseudoUpdateOptions& opt) {
  require_same_shape(preds, store.latent(), "update_pseudo");
  std::vector<std::size_t> all(store.images());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  update_pseudo_rows(store, all, preds, lam, spec, opt);
}

/// Global minimizer of the per-entry objective over the latent clamp range:
/// dense grid search, then golden-section refinement around the best cell.
/// Exact ties go to the point farther from the centre, so a saturated
/// plateau resolves to the clamp bound. Slow; meant for tests and for the
/// optional full-solve pseudo mode.
inline double solve_pseudo_exact(double pred, double lambda, const MappingSpec& spec,
                                 AceVariant variant = AceVariant::Additive,
                                 int grid_points = 20001) {
  const auto [lo, hi] = latent_bounds(spec);
  auto f = [&](double y) { return ace_term(pred, y, lambda, spec, variant); };
  const int n = std::max(grid_points, 3);
  const double h = (hi - lo) / (n - 1);
  const double centre = latent_center(spec);
  auto at = [&](int k) { return k == n - 1 ? hi : lo + k * h; };
  int best = 0;
  double best_val = f(lo);
  for (int k = 1; k < n; ++k) {
    const double v = f(at(k));
    if (v < best_val ||
        (v == best_val && std::abs(at(k) - centre) > std::abs(at(best) - centre))) {
      best_val = v;
      best = k;
    }
  }
  if (best == 0 || best == n - 1) return at(best);
  double a = lo + std::max(best - 1, 0) * h;
  double b = lo + std::min(best + 1, n - 1) * h;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * (1.0 + std::abs(a)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (a + b);
  // Keep the grid point if the refinement drifted onto a flat plateau.
  return f(mid) <= best_val ? mid : at(best);
}

/// Checkpoint: CSV with header `image,class,latent,mapped,frozen`, one row per
/// entry, values printed with 17 significant digits.
inline void save_pseudo_csv(const PseudoLabelStore& store, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "image,class,latent,mapped,frozen\n";
  char buf[128];
  for (std::size_t i = 0; i < store.images(); ++i) {
    for (std::size_t j = 0; j < store.classes(); ++j) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%d\n", i, j,
                    store.latent()(i, j), store.mapped()(i, j),
                    store.is_frozen(i, j) ? 1 : 0);
      out << buf;
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

inline PseudoLabelStore load_pseudo_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || line != "image,class,latent,mapped,frozen")
    throw ParseError(1, "expected pseudo-label checkpoint header");
  struct Row {
    std::size_t i, j;
    double latent, mapped;
    int frozen;
  };
  std::vector<Row> rows;
  std::size_t ni = 0, nj = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Row r{};
    char tail = 0;
    if (std::sscanf(line.c_str(), "%zu,%zu,%lf,%lf,%d%c", &r.i, &r.j, &r.latent,
                    &r.mapped, &r.frozen, &tail) != 5 ||
        (r.frozen != 0 && r.frozen != 1))
      throw ParseError(lineno, "malformed pseudo-label row");
    ni = std::max(ni, r.i + 1);
    nj = std::max(nj, r.j + 1);
    rows.push_back(r);
  }
  if (rows.size() != ni * nj)
    throw ParseError(0, "pseudo-label checkpoint is not a full grid");
  Matrix latent(ni, nj), mapped(ni, nj);
  LabelMatrix frozen(ni, nj, 0);
  LabelMatrix seen(ni, nj, 0);
  for (const Row& r : rows) {
    if (seen(r.i, r.j)++) throw ParseError(0, "duplicate pseudo-label entry");
    latent(r.i, r.j) = r.latent;
    mapped(r.i, r.j) = r.mapped;
    frozen(r.i, r.j) = static_cast<std::uint8_t>(r.frozen);
  }
  return PseudoLabelStore(std::move(latent), std::move(mapped), std::move(frozen));
}

}  // namespace gamepl

#endif  // GAMEPL_PSEUDO_PLAYER_HPP_
