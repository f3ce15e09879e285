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

#include <cmath>
#include <functional>
#include <random>

#include <catch_amalgamated.hpp>

#include "gamepl/network_losses.hpp"
#include "gamepl/scheduler.hpp"
#include "oracles.hpp"

using namespace gamepl;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Instance {
  Matrix preds, pseudo, xi;
  ObservationMask mask;
  LabelMatrix gt;
};

Instance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t L) {
  std::uniform_real_distribution<double> u(0.02, 0.98), w(0.0, 1.0);
  Instance in{Matrix(n, L), Matrix(n, L), Matrix(n, L), ObservationMask(n, L, Obs::Unobserved),
              LabelMatrix(n, L)};
  for (double& v : in.preds.flat()) v = u(rng);
  for (double& v : in.pseudo.flat()) v = w(rng);
  for (double& v : in.xi.flat()) v = w(rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < L; ++j) {
      in.gt(i, j) = w(rng) < 0.3;
      const double r = w(rng);
      if (r < 0.25) in.mask(i, j) = in.gt(i, j) ? Obs::Positive : Obs::Negative;
    }
  return in;
}

// Checks every entry of `grad` against central differences of `f` in preds.
void check_gradient(Matrix preds, const Matrix& grad,
                    const std::function<double(const Matrix&)>& f) {
  for (std::size_t t = 0; t < preds.size(); ++t) {
    const double keep = preds.flat()[t];
    const double fd = oracle::richardson_diff(
        [&](double v) {
          preds.flat()[t] = v;
          const double r = f(preds);
          preds.flat()[t] = keep;
          return r;
        },
        keep, 1e-4);
    REQUIRE(std::abs(grad.flat()[t] - fd) <= 1e-5 * std::max(std::abs(fd), 1e-6));
  }
}

}  // namespace

TEST_CASE("loss_obs reference values", "[losses]") {
  const PositivesRegularizer none{1.0, 0.0};
  Matrix p(2, 3, 0.4);
  const auto empty = loss_obs(p, ObservationMask(2, 3, Obs::Unobserved), none);
  CHECK(empty.value == 0.0);
  for (double g : empty.grad.flat()) CHECK(g == 0.0);

  ObservationMask one(1, 3, Obs::Unobserved);
  one(0, 1) = Obs::Positive;
  CHECK_THAT(loss_obs(Matrix(1, 3, 0.5), one, none).value, WithinAbs(std::log(2.0), 1e-15));

  const auto reg = loss_obs(Matrix(3, 4, 0.5), ObservationMask(3, 4, Obs::Unobserved), {1.0, 0.7});
  CHECK_THAT(reg.value, WithinAbs(3 * 0.7 * (0.5 - 0.25) * (0.5 - 0.25), 1e-15));
}

TEST_CASE("loss_unobs reference values", "[losses]") {
  Matrix p(2, 2, 0.3), u(2, 2, 0.8);
  const ObservationMask m(2, 2, Obs::Unobserved);
  CHECK(loss_unobs(p, u, m, Matrix(2, 2, 0.0)).value == 0.0);

  CHECK_THAT(loss_unobs(Matrix(1, 1, 0.5), Matrix(1, 1, 0.5), ObservationMask(1, 1, Obs::Unobserved),
                        Matrix(1, 1, 1.0))
                 .value,
             WithinAbs(std::log(2.0), 1e-15));

  Matrix p2(1, 2), u2(1, 2), x2(1, 2);
  p2(0, 0) = 0.7, p2(0, 1) = 0.2;
  u2(0, 0) = 0.9, u2(0, 1) = 0.4;
  x2(0, 0) = 0.25, x2(0, 1) = 0.6;
  const double want = 0.25 * oracle::bce(0.9, 0.7) + 0.6 * oracle::bce(0.4, 0.2);
  CHECK_THAT(loss_unobs(p2, u2, ObservationMask(1, 2, Obs::Unobserved), x2).value,
             WithinRel(want, 1e-14));

  ObservationMask observed(1, 2, Obs::Unobserved);
  observed(0, 0) = Obs::Positive;
  CHECK_THAT(loss_unobs(p2, u2, observed, x2).value,
             WithinRel(0.6 * oracle::bce(0.4, 0.2), 1e-14));
}

TEST_CASE("loss_g2netpl composition", "[losses]") {
  std::mt19937_64 rng(1);
  const PositivesRegularizer reg{2.0, 0.5};
  auto in = random_instance(rng, 6, 5);

  const auto r = loss_g2netpl(in.preds, in.mask, in.pseudo, in.xi, reg);
  const auto o = loss_obs(in.preds, in.mask, reg);
  const auto u = loss_unobs(in.preds, in.pseudo, in.mask, in.xi);
  CHECK(r.obs_part == o.value);
  CHECK(r.unobs_part == u.value);
  CHECK(r.total == o.value + u.value);
  for (std::size_t t = 0; t < r.grad.size(); ++t)
    CHECK(r.grad.flat()[t] == o.grad.flat()[t] + u.grad.flat()[t]);

  const auto full = loss_g2netpl(in.preds, full_mask(in.gt), in.pseudo, in.xi, reg);
  CHECK(full.unobs_part == 0.0);
  const auto none = loss_g2netpl(in.preds, ObservationMask(6, 5, Obs::Unobserved), in.pseudo,
                                 in.xi, {1.0, 0.0});
  CHECK(none.obs_part == 0.0);
}

TEST_CASE("loss_g2netpl is additive across images", "[losses][property]") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    auto in = random_instance(rng, 7, 4);
    const PositivesRegularizer reg{1.5, 0.3};
    const auto whole = loss_g2netpl(in.preds, in.mask, in.pseudo, in.xi, reg);
    double sum = 0.0;
    for (std::size_t i = 0; i < 7; ++i) {
      const std::vector<std::size_t> r{i};
      const auto part = loss_g2netpl(in.preds.gather_rows(r), in.mask.gather_rows(r),
                                     in.pseudo.gather_rows(r), in.xi.gather_rows(r), reg);
      sum += part.total;
      for (std::size_t j = 0; j < 4; ++j) REQUIRE(part.grad(0, j) == whole.grad(i, j));
    }
    REQUIRE_THAT(sum, WithinRel(whole.total, 1e-13));
  }
}

TEST_CASE("every unobserved entry carries positive weight", "[losses][property]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& [params, phi] : {std::pair{SchedulerParams{0.7, 0.9, 10}, 0.0},
                                    std::pair{SchedulerParams{0.7, 1.0, 10}, 0.1}}) {
    for (int k = 0; k < 200; ++k) {
      const double w = xi(u(rng), phi, params);
      REQUIRE(w > 0.0);
      Matrix p(1, 1, u(rng) * 0.9 + 0.05);
      REQUIRE(loss_unobs(p, Matrix(1, 1, u(rng)), ObservationMask(1, 1, Obs::Unobserved),
                         Matrix(1, 1, w))
                  .value > 0.0);
    }
  }
}

TEST_CASE("zero pseudo labels with unit weights reduce to assumed negatives",
          "[losses][property]") {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 20; ++k) {
    auto in = random_instance(rng, 5, 6);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 6; ++j)
        if (in.mask(i, j) == Obs::Negative) in.mask(i, j) = Obs::Unobserved;
    const auto u = loss_unobs(in.preds, Matrix(5, 6, 0.0), in.mask, Matrix(5, 6, 1.0));
    const auto an = baseline_loss(BaselineKind::An, in.preds, in.mask, nullptr, {});
    double observed = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        if (in.mask(i, j) == Obs::Positive) observed += oracle::bce(1.0, in.preds(i, j));
        else REQUIRE(u.grad(i, j) == an.grad(i, j));
      }
    REQUIRE_THAT(u.value, WithinAbs(an.value - observed, 1e-12));
  }
}

TEST_CASE("baseline reference values", "[losses]") {
  std::mt19937_64 rng(5);
  auto in = random_instance(rng, 4, 5);
  const ObservationMask full = full_mask(in.gt);

  const auto an_full = baseline_loss(BaselineKind::An, in.preds, full, nullptr, {});
  const auto obs_only = loss_obs(in.preds, full, {1.0, 0.0});
  CHECK_THAT(an_full.value, WithinRel(obs_only.value, 1e-14));

  BaselineParams no_ls;
  no_ls.ls_eps = 0.0;
  const auto an = baseline_loss(BaselineKind::An, in.preds, in.mask, nullptr, {});
  const auto anls0 = baseline_loss(BaselineKind::AnLs, in.preds, in.mask, nullptr, no_ls);
  CHECK(anls0.value == an.value);
  CHECK(anls0.grad == an.grad);

  Matrix p(1, 4, 0.1);
  p(0, 0) = 0.9;
  ObservationMask m(1, 4, Obs::Unobserved);
  m(0, 0) = Obs::Positive;
  const double want = -std::log(0.9) + (1.0 / 3.0) * 3.0 * -std::log(0.9);
  CHECK_THAT(baseline_loss(BaselineKind::Wan, p, m, nullptr, {}).value, WithinRel(want, 1e-14));

  const auto anls = baseline_loss(BaselineKind::AnLs, p, m, nullptr, {});
  const double smooth = oracle::bce(0.9, 0.9) + 3.0 * oracle::bce(0.1, 0.1);
  CHECK_THAT(anls.value, WithinRel(smooth, 1e-14));

  const PositivesRegularizer reg{2.0, 0.4};
  BaselineParams bp;
  bp.reg = reg;
  const auto epr = baseline_loss(BaselineKind::Epr, in.preds, in.mask, nullptr, bp);
  const auto lo = loss_obs(in.preds, in.mask, reg);
  CHECK(epr.value == lo.value);
  CHECK(epr.grad == lo.grad);

  double bce_full = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j) bce_full += oracle::bce(in.gt(i, j), in.preds(i, j));
  CHECK_THAT(baseline_loss(BaselineKind::BceFull, in.preds, in.mask, &in.gt, {}).value,
             WithinRel(bce_full, 1e-13));
}

TEST_CASE("loss errors", "[losses]") {
  const Matrix p(2, 3, 0.5);
  const ObservationMask m(2, 3, Obs::Unobserved);
  CHECK_THROWS_AS(baseline_loss(BaselineKind::BceFull, p, m, nullptr, {}), ArgumentError);
  const LabelMatrix wrong(3, 3);
  CHECK_THROWS_AS(baseline_loss(BaselineKind::BceFull, p, m, &wrong, {}), DimensionError);
  CHECK_THROWS_AS(loss_obs(p, ObservationMask(2, 2, Obs::Unobserved), {}), DimensionError);
  CHECK_THROWS_AS(loss_unobs(p, Matrix(2, 3), m, Matrix(1, 3)), DimensionError);
  CHECK_THROWS_AS(loss_g2netpl(p, m, Matrix(2, 4), Matrix(2, 3), {}), DimensionError);
  CHECK_THROWS_AS(baseline_loss(BaselineKind::Wan, p, ObservationMask(1, 3, Obs::Unobserved),
                                nullptr, {}),
                  DimensionError);
}

TEST_CASE("loss gradients match finite differences", "[losses][property]") {
  std::mt19937_64 rng(6);
  const PositivesRegularizer reg{2.0, 0.8};
  BaselineParams bp;
  bp.reg = reg;
  for (int k = 0; k < 10; ++k) {
    auto in = random_instance(rng, 3, 5);
    check_gradient(in.preds, loss_obs(in.preds, in.mask, reg).grad,
                   [&](const Matrix& p) { return loss_obs(p, in.mask, reg).value; });
    check_gradient(in.preds, loss_unobs(in.preds, in.pseudo, in.mask, in.xi).grad,
                   [&](const Matrix& p) { return loss_unobs(p, in.pseudo, in.mask, in.xi).value; });
    check_gradient(in.preds, loss_g2netpl(in.preds, in.mask, in.pseudo, in.xi, reg).grad,
                   [&](const Matrix& p) {
                     return loss_g2netpl(p, in.mask, in.pseudo, in.xi, reg).total;
                   });
    for (BaselineKind kind : {BaselineKind::BceFull, BaselineKind::An, BaselineKind::AnLs,
                              BaselineKind::Wan, BaselineKind::Epr})
      check_gradient(in.preds, baseline_loss(kind, in.preds, in.mask, &in.gt, bp).grad,
                     [&](const Matrix& p) {
                       return baseline_loss(kind, p, in.mask, &in.gt, bp).value;
                     });
  }
}
