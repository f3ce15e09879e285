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

// Multi-label datasets with partial annotation: synthetic generation,
// single-positive masking (full set and subset), and the CSV file format.

#ifndef GAMEPL_DATA_HPP_
#define GAMEPL_DATA_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gamepl/errors.hpp"
#include "gamepl/matrix.hpp"
#include "gamepl/observation.hpp"

namespace gamepl {

enum class Split : std::uint8_t { Train, Test };

struct PartialDataset {
  std::vector<std::string> ids;  // "train/<k>" or "test/<k>"
  std::vector<Split> split;
  Matrix features;           // N x input_dim
  LabelMatrix ground_truth;  // N x L, entries 0/1
  ObservationMask mask;      // N x L

  std::size_t size() const noexcept { return features.rows(); }
  std::size_t input_dim() const noexcept { return features.cols(); }
  std::size_t num_classes() const noexcept { return ground_truth.cols(); }

  std::vector<std::size_t> rows_of(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i)
      if (split[i] == s) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> train_rows() const { return rows_of(Split::Train); }
  std::vector<std::size_t> test_rows() const { return rows_of(Split::Test); }

  friend bool operator==(const PartialDataset&, const PartialDataset&) = default;
};

// Synthetic benchmark: each class owns a prototype direction; a sample's
// features are the sum of the prototypes of its active classes plus isotropic
// Gaussian noise.
struct SyntheticSpec {
  std::size_t num_classes = 8;
  std::size_t input_dim = 16;
  std::size_t n_train = 2000;
  std::size_t n_test = 1000;
  double separation = 2.0;      // prototype norm
  double feature_noise = 1.0;   // std-dev of the additive feature noise
  double label_noise = 0.0;     // probability of flipping a ground-truth entry
  double mean_positives = 2.0;  // expected active classes per sample

  void validate() const {
    if (num_classes < 1 || input_dim < 1 || n_train < 1)
      throw ArgumentError("synthetic spec: counts must be >= 1");
    if (!(separation >= 0.0) || !(feature_noise >= 0.0))
      throw ArgumentError("synthetic spec: separation and noise must be >= 0");
    if (!(label_noise >= 0.0 && label_noise < 0.5))
      throw ArgumentError("synthetic spec: label noise must lie in [0, 0.5)");
    if (!(mean_positives >= 1.0 && mean_positives <= static_cast<double>(num_classes)))
      throw ArgumentError("synthetic spec: mean positives must lie in [1, L]");
  }
};

namespace detail {

// Portable draws: the standard distributions are implementation-defined, so
// generated files would differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) {
    // Rejection keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do r = engine_(); while (r >= limit);
    return static_cast<std::size_t>(r % n);
  }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do u1 = uniform(); while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace detail

/// Fully observed synthetic dataset. Rows 0..n_train-1 are the train split.
inline PartialDataset gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  detail::Rng rng(seed);
  const std::size_t L = spec.num_classes, D = spec.input_dim;
  const std::size_t N = spec.n_train + spec.n_test;

  Matrix proto(L, D);
  for (std::size_t c = 0; c < L; ++c) {
    double norm = 0.0;
    auto row = proto.row(c);
    do {
      norm = 0.0;
      for (double& v : row) {
        v = rng.normal();
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& v : row) v *= spec.separation / norm;
  }

  PartialDataset ds;
  ds.features = Matrix(N, D);
  ds.ground_truth = LabelMatrix(N, L, 0);
  // 1 + Binomial(L - 1, q) active classes, so the mean is exactly mean_positives.
  const double extra_p = L > 1 ? (spec.mean_positives - 1.0) / static_cast<double>(L - 1) : 0.0;
  std::vector<std::size_t> classes(L);
  for (std::size_t i = 0; i < N; ++i) {
    const bool train = i < spec.n_train;
    ds.split.push_back(train ? Split::Train : Split::Test);
    ds.ids.push_back((train ? "train/" : "test/") +
                     std::to_string(train ? i : i - spec.n_train));
    std::size_t k = 1;
    for (std::size_t t = 1; t < L; ++t) k += rng.uniform() < extra_p ? 1 : 0;
    for (std::size_t c = 0; c < L; ++c) classes[c] = c;
    for (std::size_t t = 0; t < k; ++t) {
      std::swap(classes[t], classes[t + rng.below(L - t)]);
      ds.ground_truth(i, classes[t]) = 1;
    }
    auto x = ds.features.row(i);
    for (std::size_t d = 0; d < D; ++d) x[d] = spec.feature_noise * rng.normal();
    for (std::size_t c = 0; c < L; ++c)
      if (ds.ground_truth(i, c))
        for (std::size_t d = 0; d < D; ++d) x[d] += proto(c, d);
  }
  if (spec.label_noise > 0.0) {
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t c = 0; c < L; ++c) {
        if (rng.uniform() >= spec.label_noise) continue;
        std::size_t positives = 0;
        for (std::size_t t = 0; t < L; ++t) positives += ds.ground_truth(i, t);
        if (ds.ground_truth(i, c) && positives == 1) continue;  // keep >= 1 positive
        ds.ground_truth(i, c) ^= 1;
      }
    }
  }
  ds.mask = full_mask(ds.ground_truth);
  return ds;
}

namespace detail {

// Keeps one uniformly chosen positive per listed row; the rest of the row
// becomes unobserved. Afterwards every class with a positive among `rows`
// is made observed at least once, visiting classes by index and moving the
// observation of the first image whose current class is observed elsewhere.
inline void assign_single_positives(PartialDataset& ds,
                                    const std::vector<std::size_t>& rows, Rng& rng,
                                    bool strict) {
  const std::size_t L = ds.num_classes();
  std::vector<std::size_t> observed_class(ds.size(), L);
  std::vector<std::size_t> count(L, 0);
  std::vector<std::size_t> positives;
  for (std::size_t i : rows) {
    positives.clear();
    for (std::size_t c = 0; c < L; ++c)
      if (ds.ground_truth(i, c)) positives.push_back(c);
    if (positives.empty())
      throw ArgumentError("image " + ds.ids[i] + " has no positive label");
    const std::size_t c = positives[rng.below(positives.size())];
    for (std::size_t t = 0; t < L; ++t) ds.mask(i, t) = Obs::Unobserved;
    ds.mask(i, c) = Obs::Positive;
    observed_class[i] = c;
    ++count[c];
  }
  for (std::size_t c = 0; c < L; ++c) {
    if (count[c] > 0) continue;
    bool any = false, fixed = false;
    for (std::size_t i : rows) {
      if (!ds.ground_truth(i, c)) continue;
      any = true;
      const std::size_t old = observed_class[i];
      if (count[old] < 2) continue;
      ds.mask(i, old) = Obs::Unobserved;
      ds.mask(i, c) = Obs::Positive;
      --count[old];
      ++count[c];
      observed_class[i] = c;
      fixed = true;
      break;
    }
    if (!strict) continue;
    if (!any) throw ArgumentError("class " + std::to_string(c) + " has no positive train image");
    if (!fixed)
      throw ArgumentError("cannot give class " + std::to_string(c) +
                          " an observation without uncovering another class");
  }
}

}  // namespace detail

/// Full-set single positive: every train image keeps exactly one observed
/// positive and every class stays observed at least once. Test rows and
/// features are untouched.
inline PartialDataset mask_fspl(const PartialDataset& dataset, std::uint64_t seed) {
  PartialDataset ds = dataset;
  detail::Rng rng(seed);
  detail::assign_single_positives(ds, ds.train_rows(), rng, true);
  return ds;
}

/// Subset single positive: ceil(p * N_train) uniformly chosen train images get
/// the full-set rule, all other train images become entirely unobserved.
/// p = 1 reproduces mask_fspl for the same seed.
inline PartialDataset mask_sspl(const PartialDataset& dataset, double fraction,
                                std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ArgumentError("sspl fraction must lie in (0, 1]");
  auto train = dataset.train_rows();
  const auto n_labeled = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(train.size()) - 1e-9));
  if (n_labeled >= train.size()) return mask_fspl(dataset, seed);
  PartialDataset ds = dataset;
  detail::Rng rng(seed);
  rng.shuffle(train);
  std::vector<std::size_t> labeled(train.begin(), train.begin() + n_labeled);
  std::sort(labeled.begin(), labeled.end());
  for (auto it = train.begin() + n_labeled; it != train.end(); ++it)
    for (std::size_t c = 0; c < ds.num_classes(); ++c) ds.mask(*it, c) = Obs::Unobserved;
  detail::assign_single_positives(ds, labeled, rng, false);
  return ds;
}

// File format (CSV):
//   #gamepl-v1,N,input_dim,L
//   <id>,<input_dim features>,<L ground-truth 0/1>,<L mask symbols 1/0/?>
// Features are printed with 17 significant digits so a reload is exact.
// The id's prefix ("train/" or "test/") carries the split.
inline void write_dataset(const PartialDataset& ds, std::ostream& out) {
  out << "#gamepl-v1," << ds.size() << ',' << ds.input_dim() << ',' << ds.num_classes()
      << '\n';
  char buf[40];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.ids[i];
    for (double v : ds.features.row(i)) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    for (auto g : ds.ground_truth.row(i)) out << ',' << (g ? '1' : '0');
    for (auto m : ds.mask.row(i)) out << ',' << obs_symbol(m);
    out << '\n';
  }
}

inline void save_dataset(const PartialDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_dataset(ds, out);
  if (!out) throw IoError("write failed: " + path);
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::size_t parse_count(std::string_view s, std::size_t line, const char* what) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ParseError(line, std::string("bad ") + what + " '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

inline PartialDataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty dataset file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto head = detail::split_csv(line);
  if (head.size() != 4 || head[0] != "#gamepl-v1")
    throw ParseError(1, "expected header '#gamepl-v1,N,input_dim,L'");
  const std::size_t N = detail::parse_count(head[1], 1, "row count");
  const std::size_t D = detail::parse_count(head[2], 1, "input_dim");
  const std::size_t L = detail::parse_count(head[3], 1, "class count");
  if (D < 1 || L < 1) throw ParseError(1, "input_dim and L must be >= 1");

  PartialDataset ds;
  ds.features = Matrix(N, D);
  ds.ground_truth = LabelMatrix(N, L, 0);
  ds.mask = ObservationMask(N, L, Obs::Unobserved);
  const std::size_t width = 1 + D + 2 * L;
  std::size_t lineno = 1, row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row >= N) throw ParseError(lineno, "more rows than the header declares");
    const auto f = detail::split_csv(line);
    if (f.size() != width)
      throw ParseError(lineno, "expected " + std::to_string(width) + " columns, got " +
                                   std::to_string(f.size()));
    const std::string id(f[0]);
    if (id.starts_with("test/")) ds.split.push_back(Split::Test);
    else ds.split.push_back(Split::Train);
    ds.ids.push_back(id);
    for (std::size_t d = 0; d < D; ++d) {
      const auto s = f[1 + d];
      double v = 0.0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        throw ParseError(lineno, "bad feature value '" + std::string(s) + "'");
      ds.features(row, d) = v;
    }
    for (std::size_t c = 0; c < L; ++c) {
      const auto s = f[1 + D + c];
      if (s != "0" && s != "1")
        throw ParseError(lineno, "ground-truth entry must be 0 or 1, got '" + std::string(s) + "'");
      ds.ground_truth(row, c) = s == "1";
    }
    for (std::size_t c = 0; c < L; ++c) {
      const auto s = f[1 + D + L + c];
      Obs o;
      if (s == "1") o = Obs::Positive;
      else if (s == "0") o = Obs::Negative;
      else if (s == "?") o = Obs::Unobserved;
      else throw ParseError(lineno, "mask symbol must be 1, 0 or ?, got '" + std::string(s) + "'");
      if ((o == Obs::Positive && !ds.ground_truth(row, c)) ||
          (o == Obs::Negative && ds.ground_truth(row, c)))
        throw ParseError(lineno, "observed label contradicts ground truth in class " +
                                     std::to_string(c));
      ds.mask(row, c) = o;
    }
    ++row;
  }
  if (row != N)
    throw ParseError(lineno, "header declares " + std::to_string(N) + " rows, found " +
                                 std::to_string(row));
  return ds;
}

inline PartialDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_dataset(in);
}

/// FNV-1a 64-bit hash of a file's bytes, as 16 hex digits.
inline std::string file_fingerprint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize k = 0; k < in.gcount(); ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace gamepl

#endif  // GAMEPL_DATA_HPP_
