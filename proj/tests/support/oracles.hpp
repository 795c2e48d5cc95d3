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

// Brute-force reference computations, kept independent of the library.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace affeval::testing {

// Exact two-tailed sign-flip p over all 2^n assignments.
inline double exact_sign_flip_p(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double observed = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    observed += a[i] - b[i];
    scale += std::fabs(a[i] - b[i]);
  }
  std::size_t hits = 0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = a[i] - b[i];
      s += (mask >> i & 1) ? -d : d;
    }
    if (std::fabs(s) >= std::fabs(observed) - 1e-9 * (1.0 + scale)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

struct BruteMetrics {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::map<std::string, std::size_t> support;
  std::map<std::string, std::size_t> hits;

  void add(const std::string& gold, const std::string& pred) {
    ++total;
    ++support[gold];
    if (gold == pred) {
      ++correct;
      ++hits[gold];
    }
  }
  double accuracy() const { return static_cast<double>(correct) / static_cast<double>(total); }
  // Mean recall over classes that occur in gold, summed in `order`.
  double uar(const std::vector<std::string>& order) const {
    double sum = 0.0;
    std::size_t k = 0;
    for (const auto& cls : order) {
      const auto s = support.find(cls);
      if (s == support.end()) continue;
      const auto h = hits.find(cls);
      sum += static_cast<double>(h == hits.end() ? 0 : h->second) /
             static_cast<double>(s->second);
      ++k;
    }
    return sum / static_cast<double>(k);
  }
};

}  // namespace affeval::testing
