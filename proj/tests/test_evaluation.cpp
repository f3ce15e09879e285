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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include <catch_amalgamated.hpp>

#include "gamepl/evaluation.hpp"
#include "oracles.hpp"

using namespace gamepl;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

using Bits = std::vector<std::uint8_t>;

double ap(const std::vector<double>& s, const Bits& g) { return average_precision(s, g); }

}  // namespace

TEST_CASE("average_precision reference values", "[evaluation]") {
  CHECK(ap({0.9, 0.8, 0.3, 0.1}, {1, 1, 0, 0}) == 1.0);
  CHECK(ap({0.9, 0.8, 0.7}, {0, 1, 0}) == 0.5);
  for (std::size_t n = 1; n <= 12; ++n) {
    std::vector<double> s(n);
    Bits g(n, 0);
    for (std::size_t i = 0; i < n; ++i) s[i] = 1.0 - static_cast<double>(i) / n;
    g[n - 1] = 1;
    CHECK_THAT(ap(s, g), WithinAbs(1.0 / static_cast<double>(n), 1e-15));
  }
}

TEST_CASE("average_precision breaks ties by sample index", "[evaluation]") {
  CHECK(ap({0.5, 0.5, 0.5}, {0, 0, 1}) == 1.0 / 3.0);
  CHECK(ap({0.5, 0.5, 0.5}, {1, 0, 0}) == 1.0);
}

TEST_CASE("average_precision errors", "[evaluation]") {
  CHECK_THROWS_AS(ap({0.1, 0.2}, {0, 0}), UndefinedApError);
  CHECK_THROWS_AS(ap({0.1, 0.2}, {0}), DimensionError);
}

TEST_CASE("map_score reference values", "[evaluation]") {
  std::mt19937_64 rng(1);
  std::bernoulli_distribution b(0.3);
  LabelMatrix gt(15, 4);
  for (auto& v : gt.flat()) v = b(rng);
  for (std::size_t j = 0; j < 4; ++j) gt(j, j) = 1;
  Matrix perfect(15, 4), worst(15, 4);
  for (std::size_t t = 0; t < gt.size(); ++t) {
    perfect.flat()[t] = gt.flat()[t];
    worst.flat()[t] = 1.0 - gt.flat()[t];
  }
  CHECK(map_score(perfect, gt).map == 1.0);
  const auto w = map_score(worst, gt);
  double sum = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    std::size_t p = 0;
    for (std::size_t i = 0; i < 15; ++i) p += gt(i, j);
    const double want = oracle::worst_rank_ap(15, p);
    CHECK_THAT(*w.per_class_ap[j], WithinAbs(want, 1e-15));
    sum += want;
  }
  CHECK_THAT(w.map, WithinAbs(sum / 4.0, 1e-15));
}

TEST_CASE("map_score excludes classes without positives", "[evaluation]") {
  LabelMatrix gt(3, 3, 0);
  gt(0, 0) = 1;
  gt(2, 2) = 1;
  Matrix s(3, 3, 0.2);
  s(0, 0) = 0.9;
  const auto r = map_score(s, gt);
  CHECK(r.excluded == 1);
  CHECK_FALSE(r.per_class_ap[1].has_value());
  CHECK(r.map == (1.0 + 1.0 / 3.0) / 2.0);
  CHECK_THROWS_AS(map_score(s, LabelMatrix(3, 3, 0)), UndefinedApError);
  CHECK_THROWS_AS(map_score(Matrix(2, 3), gt), DimensionError);
}

TEST_CASE("map_score is invariant to sample order with distinct scores", "[evaluation][property]") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    Matrix s(17, 3);
    LabelMatrix g(17, 3);
    for (double& v : s.flat()) v = u(rng);
    for (auto& v : g.flat()) v = u(rng) < 0.4;
    for (std::size_t j = 0; j < 3; ++j) g(j, j) = 1;
    std::vector<std::size_t> perm(17);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    REQUIRE(map_score(s.gather_rows(perm), g.gather_rows(perm)).map == map_score(s, g).map);
  }
}

TEST_CASE("average_precision is invariant to monotone score transforms", "[evaluation][property]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> s(25), t(25);
    Bits g(25);
    for (std::size_t i = 0; i < 25; ++i) {
      s[i] = std::round(u(rng) * 4.0) / 4.0;  // coarse grid forces ties
      t[i] = std::exp(2.0 * s[i]) + 7.0;
      g[i] = u(rng) > 1.0;
    }
    g[k % 25] = 1;
    REQUIRE(ap(s, g) == ap(t, g));
  }
}

TEST_CASE("average_precision of a random ranking has the closed-form expectation",
          "[evaluation][property]") {
  std::mt19937_64 rng(4);
  const std::size_t n = 100, p = 30;
  Bits g(n, 0);
  std::fill(g.begin(), g.begin() + p, 1);
  std::vector<double> s(n);
  std::iota(s.begin(), s.end(), 0.0);
  const int trials = 10000;
  double sum = 0.0, sq = 0.0;
  for (int k = 0; k < trials; ++k) {
    std::shuffle(s.begin(), s.end(), rng);
    const double v = ap(s, g);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / trials;
  const double sd = std::sqrt((sq / trials - mean * mean) / trials);
  CHECK(std::abs(mean - oracle::random_ranking_ap(n, p)) <= 3.0 * sd);
  // for large n the expectation approaches the prevalence
  CHECK(std::abs(oracle::random_ranking_ap(100000, 30000) - 0.3) < 1e-3);
}

TEST_CASE("map_score agrees exactly with a precision-table implementation",
          "[evaluation][property]") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> size(1, 20), level(0, 5);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = size(rng), L = 3;
    Matrix s(n, L);
    LabelMatrix g(n, L);
    for (double& v : s.flat()) v = level(rng) / 5.0;
    for (auto& v : g.flat()) v = level(rng) < 2;
    for (std::size_t j = 0; j < L; ++j) g(static_cast<std::size_t>(k) % n, j) = 1;
    const auto r = map_score(s, g);
    double sum = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      std::vector<double> col(n);
      Bits gc(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = s(i, j), gc[i] = g(i, j);
      const double want = oracle::brute_force_ap(col, gc);
      REQUIRE(*r.per_class_ap[j] == want);
      sum += want;
    }
    REQUIRE(r.map == sum / static_cast<double>(L));
  }
}

TEST_CASE("pseudo_label_quality", "[evaluation]") {
  ObservationMask mask(6, 2, Obs::Unobserved);
  mask(0, 0) = Obs::Positive;
  mask(3, 1) = Obs::Positive;
  LabelMatrix gt(6, 2, 0);
  gt(0, 0) = gt(1, 0) = gt(4, 0) = 1;
  gt(3, 1) = gt(2, 1) = gt(5, 1) = 1;
  const MappingSpec spec;

  PseudoLabelStore exact(mask, spec);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      exact.set_latent(i, j, gt(i, j) ? 100.0 : -100.0, spec);
  CHECK(pseudo_label_quality(exact, gt, mask).map == 1.0);

  const PseudoLabelStore flat(mask, spec);
  const auto r = pseudo_label_quality(flat, gt, mask);
  // unobserved rows: class 0 -> rows 1..5 (gt 1,0,0,1,0); class 1 -> rows 0,1,2,4,5 (gt 0,0,1,0,1)
  const double c0 = oracle::brute_force_ap({0.5, 0.5, 0.5, 0.5, 0.5}, {1, 0, 0, 1, 0});
  const double c1 = oracle::brute_force_ap({0.5, 0.5, 0.5, 0.5, 0.5}, {0, 0, 1, 0, 1});
  CHECK(r.map == (c0 + c1) / 2.0);

  const ObservationMask all_obs = full_mask(gt);
  CHECK_THROWS_AS(pseudo_label_quality(PseudoLabelStore(all_obs, spec), gt, all_obs),
                  UndefinedApError);
}

TEST_CASE("trace export", "[evaluation]") {
  const auto path = std::filesystem::temp_directory_path() / "gamepl_trace.csv";
  TraceRecord a{1, 712.682635123, 700.5, 12.182635123, 0.5591641981, 0.2986080471234,
                0.3354080, 0.93370325111, 0.82261670444};
  std::vector<TraceRecord> one{a};
  export_traces(one, path.string());
  std::ifstream in(path);
  std::string header, row, extra;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "epoch,loss_total,loss_obs,loss_unobs,pseudo_confidence_mean,"
                  "pseudo_delta_norm,theta_delta_norm,map_test,pseudo_map");
  CHECK_FALSE(std::getline(in, extra));

  TraceRecord b = a;
  b.epoch = 2;
  b.map_test = std::nan("");
  std::vector<TraceRecord> two{a, b};
  export_traces(two, path.string());
  const auto back = load_traces(path.string());
  REQUIRE(back.size() == 2);
  CHECK(back[0].epoch == 1);
  CHECK(back[1].epoch == 2);
  const double TraceRecord::*fields[] = {
      &TraceRecord::loss_total,        &TraceRecord::loss_obs,
      &TraceRecord::loss_unobs,        &TraceRecord::pseudo_confidence_mean,
      &TraceRecord::pseudo_delta_norm, &TraceRecord::theta_delta_norm,
      &TraceRecord::map_test,          &TraceRecord::pseudo_map};
  for (auto f : fields) {
    const double want = a.*f, got = back[0].*f;
    if (std::abs(want) <= 1.0) CHECK_THAT(got, WithinAbs(want, 1e-9));
    CHECK_THAT(got, WithinRel(want, 5e-9));
  }
  CHECK(std::isnan(back[1].map_test));
  CHECK_THROWS_AS(export_traces(std::vector<TraceRecord>{}, path.string()), ArgumentError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_traces(path.string()), IoError);
}

TEST_CASE("nash_residual is the larger of the two moves", "[evaluation]") {
  TraceRecord r;
  CHECK(nash_residual(r) == 0.0);
  r.pseudo_delta_norm = 0.3;
  r.theta_delta_norm = 0.1;
  CHECK(nash_residual(r) == 0.3);
  std::swap(r.pseudo_delta_norm, r.theta_delta_norm);
  CHECK(nash_residual(r) == 0.3);
}
