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

#ifndef GAMEPL_ERRORS_HPP_
#define GAMEPL_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gamepl {

// Shape disagreement between arguments (matrix dims, vector lengths).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the documented domain.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input file. `line()` is 1-based; 0 means "whole file".
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite or exploding loss.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(int epoch, const std::string& what)
      : std::runtime_error("diverged at epoch " + std::to_string(epoch) +
                           ": " + what),
        epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

// Average precision requested for a class without positives.
class UndefinedApError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace gamepl

#endif  // GAMEPL_ERRORS_HPP_
