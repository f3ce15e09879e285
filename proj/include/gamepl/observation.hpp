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

#ifndef GAMEPL_OBSERVATION_HPP_
#define GAMEPL_OBSERVATION_HPP_

#include <cstdint>

#include "gamepl/matrix.hpp"

namespace gamepl {

// Annotation state of one (image, class) entry.
enum class Obs : std::uint8_t { Positive, Negative, Unobserved };

using ObservationMask = Grid<Obs>;

inline char obs_symbol(Obs o) noexcept {
  switch (o) {
    case Obs::Positive: return '1';
    case Obs::Negative: return '0';
    default: return '?';
  }
}

// Mask of a fully annotated label matrix.
inline ObservationMask full_mask(const LabelMatrix& gt) {
  ObservationMask m(gt.rows(), gt.cols(), Obs::Unobserved);
  for (std::size_t i = 0; i < gt.rows(); ++i)
    for (std::size_t j = 0; j < gt.cols(); ++j)
      m(i, j) = gt(i, j) ? Obs::Positive : Obs::Negative;
  return m;
}

}  // namespace gamepl

#endif  // GAMEPL_OBSERVATION_HPP_
