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

#ifndef GAMEPL_EVALUATION_HPP_
#define GAMEPL_EVALUATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gamepl/errors.hpp"
#include "gamepl/matrix.hpp"
#include "gamepl/observation.hpp"
#include "gamepl/pseudo_player.hpp"

namespace gamepl {

/// Non-interpolated average precision: samples ranked by descending score,
/// ties broken by ascending index; the mean of precision@k over the ranks k
/// that hold a positive.
inline double average_precision(std::span<const double> scores,
                                std::span<const std::uint8_t> gt) {
  if (scores.size() != gt.size())
    throw DimensionError("average_precision: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!gt[order[k]]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  if (hits == 0) throw UndefinedApError("average precision undefined without positives");
  return sum / static_cast<double>(hits);
}

struct ApResult {
  std::vector<std::optional<double>> per_class_ap;  // nullopt: no positives
  double map = 0.0;
  std::size_t excluded = 0;
};

namespace detail {

// Per-class AP over the rows selected by `use(i, j)`.
template <typename Use>
ApResult map_over(const Matrix& scores, const LabelMatrix& gt, Use use) {
  require_same_shape(scores, gt, "map_score");
  ApResult r;
  r.per_class_ap.resize(scores.cols());
  std::vector<double> s;
  std::vector<std::uint8_t> g;
  double sum = 0.0;
  std::size_t scored = 0;
  for (std::size_t j = 0; j < scores.cols(); ++j) {
    s.clear();
    g.clear();
    bool positive = false;
    for (std::size_t i = 0; i < scores.rows(); ++i) {
      if (!use(i, j)) continue;
      s.push_back(scores(i, j));
      g.push_back(gt(i, j) ? 1 : 0);
      positive = positive || gt(i, j);
    }
    if (!positive) {
      ++r.excluded;
      continue;
    }
    const double ap = average_precision(s, g);
    r.per_class_ap[j] = ap;
    sum += ap;
    ++scored;
  }
  if (scored == 0) throw UndefinedApError("no class has a positive sample");
  r.map = sum / static_cast<double>(scored);
  return r;
}

}  // namespace detail

/// Macro mAP over classes; classes without positives are excluded and
/// counted in `excluded`.
inline ApResult map_score(const Matrix& preds, const LabelMatrix& gt) {
  return detail::map_over(preds, gt, [](std::size_t, std::size_t) { return true; });
}

/// mAP restricted to unobserved entries of `mask`.
inline ApResult map_on_unobserved(const Matrix& scores, const LabelMatrix& gt,
                                  const ObservationMask& mask) {
  require_same_shape(scores, mask, "map_on_unobserved");
  bool any = false;
  for (Obs o : mask.flat()) any = any || o == Obs::Unobserved;
  if (!any) throw UndefinedApError("no unobserved entries to score");
  return detail::map_over(scores, gt, [&](std::size_t i, std::size_t j) {
    return mask(i, j) == Obs::Unobserved;
  });
}

/// Quality of soft pseudo labels against the ground truth, scored only on
/// entries the mask leaves unobserved (observed entries are exact by
/// construction).
inline ApResult pseudo_label_quality(const PseudoLabelStore& store, const LabelMatrix& gt,
                                     const ObservationMask& mask) {
  return map_on_unobserved(store.mapped(), gt, mask);
}

// One row of the training trace.
struct TraceRecord {
  int epoch = 0;
  double loss_total = 0.0;
  double loss_obs = 0.0;
  double loss_unobs = 0.0;
  double pseudo_confidence_mean = 0.0;  // mean |2u - 1| over unobserved entries
  double pseudo_delta_norm = 0.0;       // RMS change of pseudo labels this epoch
  double theta_delta_norm = 0.0;        // RMS change of parameters this epoch
  double map_test = std::nan("");
  double pseudo_map = std::nan("");
};

inline constexpr const char* kTraceHeader =
    "epoch,loss_total,loss_obs,loss_unobs,pseudo_confidence_mean,"
    "pseudo_delta_norm,theta_delta_norm,map_test,pseudo_map";

/// Largest move either player made in the epoch.
inline double nash_residual(const TraceRecord& rec) {
  return std::max(rec.pseudo_delta_norm, rec.theta_delta_norm);
}

inline std::string format_trace_csv(std::span<const TraceRecord> traces) {
  std::string out = kTraceHeader;
  out += '\n';
  char buf[512];
  for (const auto& t : traces) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", t.epoch,
                  t.loss_total, t.loss_obs, t.loss_unobs, t.pseudo_confidence_mean,
                  t.pseudo_delta_norm, t.theta_delta_norm, t.map_test, t.pseudo_map);
    out += buf;
  }
  return out;
}

inline void export_traces(std::span<const TraceRecord> traces, const std::string& path) {
  if (traces.empty()) throw ArgumentError("export_traces: no trace records");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << format_trace_csv(traces);
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<TraceRecord> parse_traces(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw ParseError(1, "unexpected trace header");
  std::vector<TraceRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    TraceRecord t;
    std::string fields[8];
    if (!(ss >> t.epoch)) throw ParseError(lineno, "bad epoch");
    double* dst[8] = {&t.loss_total,       &t.loss_obs,          &t.loss_unobs,
                      &t.pseudo_confidence_mean, &t.pseudo_delta_norm, &t.theta_delta_norm,
                      &t.map_test,         &t.pseudo_map};
    for (int k = 0; k < 8; ++k) {
      if (!(ss >> fields[k])) throw ParseError(lineno, "missing trace column");
      // strtod understands "nan" and "inf"; istream extraction does not.
      char* end = nullptr;
      *dst[k] = std::strtod(fields[k].c_str(), &end);
      if (end == fields[k].c_str() || *end != '\0')
        throw ParseError(lineno, "bad number '" + fields[k] + "'");
    }
    out.push_back(t);
  }
  return out;
}

inline std::vector<TraceRecord> load_traces(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return parse_traces(in);
}

}  // namespace gamepl

#endif  // GAMEPL_EVALUATION_HPP_
