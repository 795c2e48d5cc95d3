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

#include "affeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "affeval/error.hpp"
#include "affeval/random.hpp"

namespace affeval {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes)
    : classes_(std::move(classes)), counts_(classes_.size() * classes_.size(), 0) {
  if (classes_.empty()) throw InvalidArgument("confusion matrix needs classes");
  std::vector<std::string> sorted = classes_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidArgument("duplicate class in confusion matrix");
  }
}

std::size_t ConfusionMatrix::index_of(std::string_view label) const {
  auto it = std::find(classes_.begin(), classes_.end(), label);
  if (it == classes_.end()) {
    throw InvalidArgument("label '" + std::string(label) + "' is not a class");
  }
  return static_cast<std::size_t>(it - classes_.begin());
}

void ConfusionMatrix::add(std::string_view gold, std::string_view predicted,
                          std::size_t n) {
  add_at(index_of(gold), index_of(predicted), n);
}

void ConfusionMatrix::add_at(std::size_t gold, std::size_t predicted, std::size_t n) {
  if (gold >= size() || predicted >= size()) {
    throw InvalidArgument("class index out of range");
  }
  counts_[gold * size() + predicted] += n;
}

std::size_t ConfusionMatrix::gold_count(std::size_t gold) const {
  std::size_t sum = 0;
  for (std::size_t p = 0; p < size(); ++p) sum += count(gold, p);
  return sum;
}

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t sum = 0;
  for (std::size_t c = 0; c < size(); ++c) sum += count(c, c);
  return sum;
}

std::vector<std::string> ConfusionMatrix::unsupported_classes() const {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < size(); ++c) {
    if (gold_count(c) == 0) out.push_back(classes_[c]);
  }
  return out;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (classes_ != other.classes_) {
    throw InvalidArgument("cannot pool confusion matrices with different classes");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  excluded += other.excluded;
  return *this;
}

ConfusionMatrix confusion(std::span<const std::string> gold,
                          std::span<const std::string> predicted,
                          const std::vector<std::string>& classes) {
  if (gold.size() != predicted.size()) {
    throw InvalidArgument("gold has " + std::to_string(gold.size()) +
                          " entries but predictions have " +
                          std::to_string(predicted.size()));
  }
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < gold.size(); ++i) cm.add(gold[i], predicted[i]);
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) throw InvalidArgument("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

double recall(const ConfusionMatrix& cm, std::size_t cls) {
  const std::size_t support = cm.gold_count(cls);
  if (support == 0) {
    throw InvalidArgument("class '" + cm.classes()[cls] + "' has no gold instances");
  }
  return static_cast<double>(cm.count(cls, cls)) / static_cast<double>(support);
}

double uar(const ConfusionMatrix& cm) {
  if (cm.size() == 0) throw InvalidArgument("UAR of a matrix without classes");
  double sum = 0.0;
  for (std::size_t c = 0; c < cm.size(); ++c) sum += recall(cm, c);
  return sum / static_cast<double>(cm.size());
}

double supported_uar(const ConfusionMatrix& cm) {
  double sum = 0.0;
  std::size_t supported = 0;
  for (std::size_t c = 0; c < cm.size(); ++c) {
    if (cm.gold_count(c) == 0) continue;
    sum += recall(cm, c);
    ++supported;
  }
  if (supported == 0) throw InvalidArgument("UAR of an empty confusion matrix");
  return sum / static_cast<double>(supported);
}

ConfusionMatrix micro_pool(std::span<const ConfusionMatrix> matrices) {
  if (matrices.empty()) throw InvalidArgument("nothing to pool");
  ConfusionMatrix pooled = matrices.front();
  for (std::size_t i = 1; i < matrices.size(); ++i) pooled += matrices[i];
  return pooled;
}

std::string significance_stars(double p) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw InvalidArgument("p-value must lie in (0, 1], got " + std::to_string(p));
  }
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

namespace {

struct PreparedDiffs {
  std::vector<double> diffs;
  std::vector<std::uint32_t> key_lo;
  std::vector<std::uint32_t> key_hi;
};

PreparedDiffs prepare(std::span<const double> a, std::span<const double> b,
                      const std::vector<std::uint64_t>& keys) {
  const std::size_t n = a.size();
  const std::size_t padded = (n + kernels::kLanes - 1) / kernels::kLanes * kernels::kLanes;
  PreparedDiffs out;
  out.diffs.assign(padded, 0.0);
  out.key_lo.assign(padded, 0);
  out.key_hi.assign(padded, 0);
  for (std::size_t i = 0; i < n; ++i) {
    out.diffs[i] = a[i] - b[i];
    out.key_lo[i] = static_cast<std::uint32_t>(keys[i]);
    out.key_hi[i] = static_cast<std::uint32_t>(keys[i] >> 32);
  }
  return out;
}

std::size_t count_extreme(const kernels::SignFlipInput& input, std::uint64_t begin,
                          std::uint64_t end, double threshold, kernels::Isa isa) {
  constexpr std::size_t kChunk = 4096;
  std::vector<double> sums(kChunk);
  std::size_t count = 0;
  for (std::uint64_t t = begin; t < end; t += kChunk) {
    const std::size_t len = static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, end - t));
    std::span<double> out(sums.data(), len);
    kernels::sign_flip_sums(input, t, out, isa);
    for (double s : out) {
      if (std::abs(s) >= threshold) ++count;
    }
  }
  return count;
}

SignificanceResult run_test(std::span<const double> a, std::span<const double> b,
                            const std::vector<std::uint64_t>& keys,
                            const PermutationOptions& options) {
  if (a.size() != b.size()) {
    throw InvalidArgument("permutation test needs equal-length vectors, got " +
                          std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  if (a.empty()) throw InvalidArgument("permutation test on empty vectors");
  if (options.iterations < 1) throw InvalidArgument("iterations must be >= 1");

  const PreparedDiffs prepared = prepare(a, b, keys);
  const kernels::SignFlipInput input{prepared.diffs, prepared.key_lo, prepared.key_hi,
                                     options.seed};
  const kernels::Isa isa = options.isa.value_or(kernels::best_isa());

  double scale = 0.0;
  for (double d : prepared.diffs) scale += std::abs(d);
  const double observed = kernels::lane_ordered_sum(prepared.diffs);
  const double threshold = std::abs(observed) - kPermutationTieTolerance * scale;

  const std::size_t workers =
      std::max<std::size_t>(1, std::min(options.workers, options.iterations));
  std::vector<std::size_t> counts(workers, 0);
  const std::uint64_t iters = options.iterations;
  const auto range_begin = [&](std::size_t w) { return iters * w / workers; };
  if (workers == 1) {
    counts[0] = count_extreme(input, 0, iters, threshold, isa);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        counts[w] = count_extreme(input, range_begin(w), range_begin(w + 1), threshold, isa);
      });
    }
  }
  const std::size_t extreme = std::accumulate(counts.begin(), counts.end(), std::size_t{0});

  const double n = static_cast<double>(a.size());
  SignificanceResult out;
  out.statistic = std::accumulate(a.begin(), a.end(), 0.0) / n -
                  std::accumulate(b.begin(), b.end(), 0.0) / n;
  out.iterations = options.iterations;
  out.seed = options.seed;
  out.p_value = (1.0 + static_cast<double>(extreme)) /
                (1.0 + static_cast<double>(options.iterations));
  out.stars = significance_stars(out.p_value);
  return out;
}

}  // namespace

SignificanceResult permutation_test(std::span<const double> a, std::span<const double> b,
                                    std::span<const std::string> example_keys,
                                    const PermutationOptions& options) {
  if (example_keys.size() != a.size()) {
    throw InvalidArgument("permutation test needs one key per example");
  }
  std::vector<std::uint64_t> keys;
  keys.reserve(example_keys.size());
  for (const auto& k : example_keys) keys.push_back(derive_seed(options.seed, k));
  return run_test(a, b, keys, options);
}

SignificanceResult permutation_test(std::span<const double> a, std::span<const double> b,
                                    const PermutationOptions& options) {
  std::vector<std::uint64_t> keys;
  keys.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    keys.push_back(derive_seed(options.seed, static_cast<std::uint64_t>(i)));
  }
  return run_test(a, b, keys, options);
}

SignificanceResult permutation_test(std::span<const double> a, std::span<const double> b,
                                    std::size_t iterations, std::uint64_t seed) {
  PermutationOptions options;
  options.iterations = iterations;
  options.seed = seed;
  return permutation_test(a, b, options);
}

}  // namespace affeval
