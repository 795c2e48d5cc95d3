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

// Regression tasks evaluated as pairwise ranking: "is score(A) > score(B)?"
//
// Comparison pairs come from a small-world graph over the items. Items are
// shuffled onto a ring, each item is joined to its `multiplier` successors
// (so the ring lattice has exactly multiplier * N edges) and every edge is
// rewired with probability kRewireProbability to a random non-duplicate
// endpoint. Inputs too small for the lattice get the complete graph.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "affeval/corpus.hpp"

namespace affeval {

inline constexpr std::size_t kDefaultPairsMultiplier = 4;
inline constexpr double kRewireProbability = 0.1;

struct PairSet {
  std::size_t n_items = 0;
  std::size_t multiplier = kDefaultPairsMultiplier;
  // Unordered item-index pairs, stored with first < second.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::uint64_t seed = 0;
};

struct SmallWorldOptions {
  double rewire_probability = kRewireProbability;
};

// Number of edges sample_pairs produces: min(multiplier * n, n * (n - 1) / 2).
std::size_t expected_edge_count(std::size_t n_items, std::size_t multiplier);

PairSet sample_pairs(std::size_t n_items, std::size_t multiplier, std::uint64_t seed,
                     const SmallWorldOptions& options = {});

bool is_connected(std::size_t n_items,
                  std::span<const std::pair<std::size_t, std::size_t>> edges);

struct PairInstance {
  std::string left_id;   // shown to the model as text A
  std::string right_id;  // shown as text B
  std::string gold;      // "A" iff score(left) > score(right), else "B"
  std::uint64_t presentation_seed = 0;

  // Stable identifier used as the example id of the pair's exchange.
  std::string id() const { return left_id + "|" + right_id; }

  bool operator==(const PairInstance&) const = default;
};

struct PairBuild {
  std::vector<PairInstance> instances;
  std::size_t ties_discarded = 0;
  std::size_t resampled = 0;
  // Set when tie replacement could not restore the requested count.
  bool short_of_target = false;
};

// One instance per non-tied edge; tied edges are replaced by fresh non-tied,
// non-duplicate pairs (at most 10 * |edges| draws). A per-instance coin flip,
// derived from presentation_seed, picks which item is presented first.
PairBuild build_pair_instances(std::span<const ScalarExample> examples,
                               const PairSet& pairs, std::uint64_t seed);

// Fields: left_id, right_id, gold, presentation_seed.
void write_pair_instances(std::ostream& out, std::span<const PairInstance> pairs);
void write_pair_instances(const std::filesystem::path& path,
                          std::span<const PairInstance> pairs);
std::vector<PairInstance> load_pair_instances(const std::filesystem::path& path);
std::vector<PairInstance> parse_pair_instances(std::istream& in);

// Successive-halving scalar prediction.
//
// `greater_than(v)` answers whether the query's value exceeds v. The search
// range starts at [anchors.front(), anchors.back()] and each comparison
// splits it at a pivot: the median anchor inside the range when that split
// keeps the comparison count within ceil(log2(range / epsilon)) + 1,
// otherwise the range midpoint. Stops once the width is <= epsilon.
struct ScalarPrediction {
  double value = 0.0;  // midpoint of the final range
  double lo = 0.0;
  double hi = 0.0;
  std::size_t comparisons = 0;
  std::size_t verification_comparisons = 0;
  // False when the oracle contradicted itself (see PredictOptions::verify).
  bool consistent = true;
  std::vector<std::pair<double, bool>> queries;  // (pivot, answer)
};

struct PredictOptions {
  // Re-ask the pivots bounding the final range and flag disagreements.
  bool verify = false;
};

ScalarPrediction predict_scalar(const std::function<bool(double)>& greater_than,
                                std::span<const double> anchors, double epsilon,
                                const PredictOptions& options = {});

// ceil(log2(width / epsilon)) + 1, or 0 when width <= epsilon.
std::size_t halving_comparison_bound(double width, double epsilon);

}  // namespace affeval
