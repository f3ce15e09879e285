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

#ifndef GAMEPL_SCHEDULER_HPP_
#define GAMEPL_SCHEDULER_HPP_

#include <cmath>
#include <string>

#include "gamepl/errors.hpp"

namespace gamepl {

// Confidence-aware weight on unobserved-label loss terms. Combines the
// confidence |2u - 1| of a pseudo label u with training progress phi.
struct SchedulerParams {
  double beta = 0.7;   // share of the confidence term, in [0,1]
  double gamma = 1.0;  // > 0
  int total_epochs = 10;

  void validate() const {
    if (!(beta >= 0.0 && beta <= 1.0))
      throw ArgumentError("scheduler beta must lie in [0,1]");
    if (!(gamma > 0.0 && std::isfinite(gamma)))
      throw ArgumentError("scheduler gamma must be finite and > 0");
    if (total_epochs < 1)
      throw ArgumentError("scheduler total_epochs must be >= 1");
  }
};

/// Fraction of training completed at `epoch`.
inline double progress(int epoch, const SchedulerParams& params) {
  if (epoch < 0 || epoch > params.total_epochs)
    throw ArgumentError("epoch " + std::to_string(epoch) + " outside [0, " +
                        std::to_string(params.total_epochs) + "]");
  return static_cast<double>(epoch) / params.total_epochs;
}

/// xi(u, phi) = beta (1 - g e^{-10|2u-1|}) / (1 + g e^{-10|2u-1|})
///            + (1 - beta) phi
inline double xi(double pseudo, double phi, const SchedulerParams& params) {
  const double g = params.gamma * std::exp(-10.0 * std::abs(2.0 * pseudo - 1.0));
  return params.beta * (1.0 - g) / (1.0 + g) + (1.0 - params.beta) * phi;
}

}  // namespace gamepl

#endif  // GAMEPL_SCHEDULER_HPP_
