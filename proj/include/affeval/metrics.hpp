// Copyright 2026 The affeval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "affeval/kernels.hpp"

namespace affeval {

// Gold x predicted counts over an ordered class list.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> classes);

  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t size() const { return classes_.size(); }

  std::size_t index_of(std::string_view label) const;  // throws if unknown
  void add(std::string_view gold, std::string_view predicted, std::size_t n = 1);
  void add_at(std::size_t gold, std::size_t predicted, std::size_t n = 1);

  std::size_t count(std::size_t gold, std::size_t predicted) const {
    return counts_[gold * classes_.size() + predicted];
  }
  std::size_t gold_count(std::size_t gold) const;
  std::size_t total() const;
  std::size_t trace() const;
  // Classes without a single gold instance; their recall is undefined.
  std::vector<std::string> unsupported_classes() const;

  // Examples dropped from scoring; carried along, never counted in cells.
  std::size_t excluded = 0;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::vector<std::string> classes_;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion(std::span<const std::string> gold,
                          std::span<const std::string> predicted,
                          const std::vector<std::string>& classes);

// trace / total. Throws on an empty matrix.
double accuracy(const ConfusionMatrix& cm);
double recall(const ConfusionMatrix& cm, std::size_t cls);
// Mean per-class recall. Throws naming the first class without gold support.
double uar(const ConfusionMatrix& cm);
// Mean recall over the classes that have gold support.
double supported_uar(const ConfusionMatrix& cm);

// Element-wise sum. Throws on an empty list or differing class lists.
ConfusionMatrix micro_pool(std::span<const ConfusionMatrix> matrices);

struct SignificanceResult {
  double statistic = 0.0;  // mean(a) - mean(b)
  double p_value = 1.0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::string stars;
};

inline constexpr std::size_t kDefaultPermutationIterations = 10000;

struct PermutationOptions {
  std::size_t iterations = kDefaultPermutationIterations;
  std::uint64_t seed = 0;
  // Worker threads; the result does not depend on this.
  std::size_t workers = 1;
  // Kernel override, mainly for equivalence tests.
  std::optional<kernels::Isa> isa;
};

// Two-tailed paired sign-flip test of mean(a) - mean(b). Each iteration
// flips every example's A/B assignment with probability 1/2;
// p = (1 + #{|permuted| >= |observed|}) / (1 + iterations).
//
// Flips are keyed by (seed, example key, iteration), so reordering examples
// together with their keys leaves p unchanged.
SignificanceResult permutation_test(std::span<const double> a, std::span<const double> b,
                                    std::span<const std::string> example_keys,
                                    const PermutationOptions& options);

// Keys default to example positions.
SignificanceResult permutation_test(std::span<const double> a, std::span<const double> b,
                                    const PermutationOptions& options);

SignificanceResult permutation_test(std::span<const double> a, std::span<const double> b,
                                    std::size_t iterations, std::uint64_t seed);

// "**" for p < 0.01, "*" for p < 0.05, "" otherwise. p must lie in (0, 1].
std::string significance_stars(double p);

// Relative slack used when deciding |permuted| >= |observed|, so sums equal
// up to rounding count as ties.
inline constexpr double kPermutationTieTolerance = 1e-10;

}  // namespace affeval
