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

// Scalar primitives shared by the network player and the pseudo-label
// player: clamped binary cross-entropy and the latent-to-probability maps.

#ifndef GAMEPL_NUMERICS_HPP_
#define GAMEPL_NUMERICS_HPP_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "gamepl/errors.hpp"

namespace gamepl {

// Probabilities are pulled into [kProbEps, 1 - kProbEps] before any log.
inline constexpr double kProbEps = 1e-7;

// Latent values live in [0.5 - kLatentSpan * sigma, 0.5 + kLatentSpan * sigma]
// for the Gaussian CDF map and in [-kSigmoidLatentBound, kSigmoidLatentBound]
// for the sigmoid. The bounds stand in for the roots at +/- infinity.
inline constexpr double kLatentSpan = 8.0;
inline constexpr double kSigmoidLatentBound = 16.0;

inline double clamp_prob(double q) noexcept {
  return std::clamp(q, kProbEps, 1.0 - kProbEps);
}

/// Binary cross-entropy -p log q - (1-p) log(1-q) with q clamped.
inline double stable_bce(double p, double q) noexcept {
  const double qc = clamp_prob(q);
  return -p * std::log(qc) - (1.0 - p) * std::log1p(-qc);
}

/// d stable_bce / dq, evaluated at the clamped q. Keeps its sign in the
/// saturated region instead of dropping to zero.
inline double stable_bce_dq(double p, double q) noexcept {
  const double qc = clamp_prob(q);
  return (qc - p) / (qc * (1.0 - qc));
}

inline double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Standard normal CDF. std::erfc keeps full relative precision in both
/// tails, well inside the 1e-7 absolute budget.
inline double normal_cdf(double z) noexcept {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double normal_pdf(double z) noexcept {
  return std::numbers::inv_sqrtpi / std::numbers::sqrt2 * std::exp(-0.5 * z * z);
}

enum class MappingKind { Sigmoid, GaussianCdf };

// F: latent -> [0,1]. `sigma` is the spread of the Gaussian CDF centred at
// 0.5 and is ignored by the sigmoid.
struct MappingSpec {
  MappingKind kind = MappingKind::GaussianCdf;
  double sigma = 0.3;

  void validate() const {
    if (kind == MappingKind::GaussianCdf && !(sigma > 0.0 && std::isfinite(sigma)))
      throw ArgumentError("mapping sigma must be finite and > 0");
  }

  static MappingSpec gaussian(double s) { return {MappingKind::GaussianCdf, s}; }
  static MappingSpec logistic() { return {MappingKind::Sigmoid, 1.0}; }
};

inline std::string to_string(MappingKind k) {
  return k == MappingKind::Sigmoid ? "sigmoid" : "gaussian-cdf";
}

/// Latent value that maps to 0.5.
inline double latent_center(const MappingSpec& spec) noexcept {
  return spec.kind == MappingKind::GaussianCdf ? 0.5 : 0.0;
}

inline std::pair<double, double> latent_bounds(const MappingSpec& spec) noexcept {
  if (spec.kind == MappingKind::GaussianCdf)
    return {0.5 - kLatentSpan * spec.sigma, 0.5 + kLatentSpan * spec.sigma};
  return {-kSigmoidLatentBound, kSigmoidLatentBound};
}

inline double clamp_latent(double y, const MappingSpec& spec) noexcept {
  const auto [lo, hi] = latent_bounds(spec);
  return std::clamp(y, lo, hi);
}

/// F(y). Strictly increasing; not clamped (callers clamp before logs).
inline double map_latent(double y, const MappingSpec& spec) noexcept {
  if (spec.kind == MappingKind::Sigmoid) return sigmoid(y);
  return normal_cdf((y - 0.5) / spec.sigma);
}

/// F'(y). Peak 1/(sigma sqrt(2 pi)) at y = 0.5 for the Gaussian CDF.
inline double map_latent_derivative(double y, const MappingSpec& spec) noexcept {
  if (spec.kind == MappingKind::Sigmoid) {
    const double s = sigmoid(y);
    return s * (1.0 - s);
  }
  return normal_pdf((y - 0.5) / spec.sigma) / spec.sigma;
}

}  // namespace gamepl

#endif  // GAMEPL_NUMERICS_HPP_
