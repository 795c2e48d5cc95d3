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

#include "affeval/pairrank.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "affeval/error.hpp"
#include "affeval/jsonl.hpp"
#include "affeval/random.hpp"

namespace affeval {

namespace {

using Edge = std::pair<std::size_t, std::size_t>;

Edge make_edge(std::size_t u, std::size_t v) { return u < v ? Edge{u, v} : Edge{v, u}; }

class EdgeKeys {
 public:
  explicit EdgeKeys(std::size_t n) : n_(n) {}
  std::uint64_t key(const Edge& e) const {
    return static_cast<std::uint64_t>(e.first) * n_ + e.second;
  }
  bool contains(const Edge& e) const { return keys_.contains(key(e)); }
  bool insert(const Edge& e) { return keys_.insert(key(e)).second; }
  void erase(const Edge& e) { keys_.erase(key(e)); }

 private:
  std::uint64_t n_;
  std::unordered_set<std::uint64_t> keys_;
};

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

// Components as lists of nodes, ordered by their smallest node.
std::vector<std::vector<std::size_t>> components(std::size_t n,
                                                 std::span<const Edge> edges) {
  DisjointSets sets(n);
  for (const auto& [a, b] : edges) sets.unite(a, b);
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t root = sets.find(v);
    if (slot[root] == n) {
      slot[root] = out.size();
      out.emplace_back();
    }
    out[slot[root]].push_back(v);
  }
  return out;
}

void repair_connectivity(std::size_t n, std::vector<Edge>& edges,
                         std::vector<bool>& rewired, EdgeKeys& keys, Rng& rng) {
  auto comps = components(n, edges);
  if (comps.size() <= 1) return;

  const auto& main = comps.front();
  std::vector<Edge> bridges;
  for (std::size_t c = 1; c < comps.size(); ++c) {
    const std::size_t u = main[uniform_index(rng, main.size())];
    const std::size_t v = comps[c][uniform_index(rng, comps[c].size())];
    bridges.push_back(make_edge(u, v));
  }

  // Each bridge displaces one redundant edge so the total count is unchanged.
  // Rewired edges are dropped first; any other non-bridge edge is the fallback.
  for (const Edge& bridge : bridges) {
    std::vector<std::size_t> candidates;
    std::vector<std::size_t> fallback;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      (rewired[i] ? candidates : fallback).push_back(i);
    }
    shuffle(candidates, rng);
    shuffle(fallback, rng);
    candidates.insert(candidates.end(), fallback.begin(), fallback.end());

    bool placed = false;
    for (std::size_t idx : candidates) {
      std::vector<Edge> trial = edges;
      trial[idx] = bridge;
      // Accept only a net merge: the dropped edge must not split a component.
      auto before = components(n, edges).size();
      auto after = components(n, trial).size();
      if (after < before) {
        keys.erase(edges[idx]);
        keys.insert(bridge);
        edges[idx] = bridge;
        rewired[idx] = false;
        placed = true;
        break;
      }
    }
    if (!placed) throw Error("small-world repair failed to place a bridge edge");
  }
}

}  // namespace

std::size_t expected_edge_count(std::size_t n_items, std::size_t multiplier) {
  const std::size_t complete = n_items * (n_items - 1) / 2;
  return std::min(multiplier * n_items, complete);
}

PairSet sample_pairs(std::size_t n_items, std::size_t multiplier, std::uint64_t seed,
                     const SmallWorldOptions& options) {
  if (n_items < 2) throw InvalidArgument("pair sampling needs at least 2 items");
  if (multiplier < 1) throw InvalidArgument("pairs multiplier must be >= 1");
  if (options.rewire_probability < 0.0 || options.rewire_probability > 1.0) {
    throw InvalidArgument("rewire probability must be in [0, 1]");
  }

  PairSet out;
  out.n_items = n_items;
  out.multiplier = multiplier;
  out.seed = seed;

  // The ring needs 2 * multiplier + 1 nodes for distinct neighbours; below
  // that multiplier * N reaches or exceeds the number of distinct pairs.
  if (n_items <= 2 * multiplier + 1) {
    for (std::size_t a = 0; a < n_items; ++a) {
      for (std::size_t b = a + 1; b < n_items; ++b) out.edges.emplace_back(a, b);
    }
    return out;
  }

  Rng rng = make_rng(derive_seed(seed, "small-world"));
  std::vector<std::size_t> ring(n_items);
  std::iota(ring.begin(), ring.end(), std::size_t{0});
  shuffle(ring, rng);

  EdgeKeys keys(n_items);
  std::vector<Edge> edges;
  std::vector<std::size_t> origin;  // ring source node of each lattice edge
  edges.reserve(multiplier * n_items);
  for (std::size_t pos = 0; pos < n_items; ++pos) {
    for (std::size_t step = 1; step <= multiplier; ++step) {
      const Edge e = make_edge(ring[pos], ring[(pos + step) % n_items]);
      keys.insert(e);
      edges.push_back(e);
      origin.push_back(ring[pos]);
    }
  }

  std::vector<bool> rewired(edges.size(), false);
  constexpr int kMaxEndpointDraws = 64;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!bernoulli(rng, options.rewire_probability)) continue;
    const std::size_t u = origin[i];
    for (int attempt = 0; attempt < kMaxEndpointDraws; ++attempt) {
      const std::size_t w = uniform_index(rng, n_items);
      if (w == u) continue;
      const Edge candidate = make_edge(u, w);
      if (keys.contains(candidate)) continue;
      keys.erase(edges[i]);
      keys.insert(candidate);
      edges[i] = candidate;
      rewired[i] = true;
      break;
    }
  }

  repair_connectivity(n_items, edges, rewired, keys, rng);
  out.edges = std::move(edges);
  return out;
}

bool is_connected(std::size_t n_items, std::span<const Edge> edges) {
  if (n_items == 0) return true;
  DisjointSets sets(n_items);
  std::size_t merged = 0;
  for (const auto& [a, b] : edges) {
    if (a >= n_items || b >= n_items) return false;
    if (sets.unite(a, b)) ++merged;
  }
  return merged == n_items - 1;
}

PairBuild build_pair_instances(std::span<const ScalarExample> examples,
                               const PairSet& pairs, std::uint64_t seed) {
  const std::size_t n = examples.size();
  if (pairs.n_items != n) {
    throw InvalidArgument("pair set covers " + std::to_string(pairs.n_items) +
                          " items but " + std::to_string(n) + " examples given");
  }
  const auto [lo_it, hi_it] = std::minmax_element(
      examples.begin(), examples.end(),
      [](const auto& a, const auto& b) { return a.score < b.score; });
  if (n < 2 || lo_it->score == hi_it->score) throw ValidationError("no rankable pairs");

  EdgeKeys used(n);
  std::vector<Edge> kept;
  PairBuild out;
  for (const Edge& e : pairs.edges) {
    if (e.first >= n || e.second >= n || e.first == e.second) {
      throw InvalidArgument("pair index out of range");
    }
    used.insert(e);
    if (examples[e.first].score == examples[e.second].score) {
      ++out.ties_discarded;
    } else {
      kept.push_back(e);
    }
  }

  const std::size_t target = pairs.edges.size();
  Rng rng = make_rng(derive_seed(seed, "tie-resample"));
  const std::size_t max_draws = 10 * target;
  for (std::size_t draw = 0; kept.size() < target && draw < max_draws; ++draw) {
    const std::size_t a = uniform_index(rng, n);
    const std::size_t b = uniform_index(rng, n);
    if (a == b) continue;
    const Edge e = make_edge(a, b);
    if (!used.insert(e)) continue;
    if (examples[a].score == examples[b].score) continue;
    kept.push_back(e);
    ++out.resampled;
  }
  out.short_of_target = kept.size() < target;

  out.instances.reserve(kept.size());
  for (const auto& [a, b] : kept) {
    const ScalarExample& first = examples[a];
    const ScalarExample& second = examples[b];
    const std::uint64_t presentation =
        derive_seed(derive_seed(seed, first.id), fnv1a64(second.id));
    const bool swap = (presentation >> 63) != 0;
    const ScalarExample& left = swap ? second : first;
    const ScalarExample& right = swap ? first : second;
    out.instances.push_back(PairInstance{left.id, right.id,
                                         left.score > right.score ? "A" : "B",
                                         presentation});
  }
  return out;
}

void write_pair_instances(std::ostream& out, std::span<const PairInstance> pairs) {
  for (const auto& p : pairs) {
    OrderedJson j;
    j["left_id"] = p.left_id;
    j["right_id"] = p.right_id;
    j["gold"] = p.gold;
    j["presentation_seed"] = p.presentation_seed;
    out << j.dump() << '\n';
  }
}

void write_pair_instances(const std::filesystem::path& path,
                          std::span<const PairInstance> pairs) {
  std::ostringstream ss;
  write_pair_instances(ss, pairs);
  write_file(path, ss.str());
}

std::vector<PairInstance> parse_pair_instances(std::istream& in) {
  std::vector<PairInstance> out;
  for_each_record(in, [&](std::size_t line, const Json& j) {
    RecordReader r(j, line);
    PairInstance p;
    p.left_id = r.string("left_id");
    p.right_id = r.string("right_id");
    p.gold = r.string("gold");
    if (r.has("presentation_seed")) {
      const Json& s = r.raw("presentation_seed");
      if (!s.is_number_unsigned() && !s.is_number_integer()) {
        throw IngestionError(line, "presentation_seed", "expected an integer");
      }
      p.presentation_seed = s.get<std::uint64_t>();
    }
    r.finish();
    if (p.gold != "A" && p.gold != "B") {
      throw IngestionError(line, "gold", "gold must be \"A\" or \"B\"");
    }
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<PairInstance> load_pair_instances(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open pair file " + path.string());
  return parse_pair_instances(in);
}

std::size_t halving_comparison_bound(double width, double epsilon) {
  if (width <= epsilon) return 0;
  return static_cast<std::size_t>(std::ceil(std::log2(width / epsilon))) + 1;
}

ScalarPrediction predict_scalar(const std::function<bool(double)>& greater_than,
                                std::span<const double> anchors, double epsilon,
                                const PredictOptions& options) {
  if (anchors.size() < 2) throw InvalidArgument("need at least two anchors");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (!std::is_sorted(anchors.begin(), anchors.end())) {
    throw InvalidArgument("anchors must be sorted ascending");
  }

  ScalarPrediction out;
  double lo = anchors.front();
  double hi = anchors.back();
  std::size_t remaining = halving_comparison_bound(hi - lo, epsilon);
  // Pivots that produced the current bounds, for verification.
  std::optional<double> lo_pivot;
  std::optional<double> hi_pivot;

  while (hi - lo > epsilon && remaining > 0) {
    // After this comparison the remaining budget must still cover plain
    // bisection of the larger side.
    const double allowed = epsilon * std::ldexp(1.0, static_cast<int>(remaining) - 1);
    const auto acceptable = [&](double pivot) {
      return std::max(pivot - lo, hi - pivot) <= allowed;
    };

    const auto first = std::upper_bound(anchors.begin(), anchors.end(), lo);
    const auto last = std::lower_bound(anchors.begin(), anchors.end(), hi);
    double pivot = 0.5 * (lo + hi);
    if (first < last) {
      const double median = *(first + (last - first - 1) / 2);
      if (acceptable(median)) {
        pivot = median;
      } else {
        const double mid = 0.5 * (lo + hi);
        const auto nearest = std::min_element(first, last, [&](double a, double b) {
          return std::abs(a - mid) < std::abs(b - mid);
        });
        if (acceptable(*nearest)) pivot = *nearest;
      }
    }

    const bool above = greater_than(pivot);
    out.queries.emplace_back(pivot, above);
    ++out.comparisons;
    --remaining;
    if (above) {
      lo = pivot;
      lo_pivot = pivot;
    } else {
      hi = pivot;
      hi_pivot = pivot;
    }
  }

  if (options.verify) {
    for (const auto& pivot : {lo_pivot, hi_pivot}) {
      if (!pivot) continue;
      out.queries.emplace_back(*pivot, greater_than(*pivot));
      ++out.verification_comparisons;
    }
  }

  // Monotone answers: every "greater" pivot lies strictly below every
  // "not greater" pivot.
  double max_greater = -std::numeric_limits<double>::infinity();
  double min_not_greater = std::numeric_limits<double>::infinity();
  for (const auto& [pivot, above] : out.queries) {
    if (above) {
      max_greater = std::max(max_greater, pivot);
    } else {
      min_not_greater = std::min(min_not_greater, pivot);
    }
  }
  out.consistent = max_greater < min_not_greater;

  out.lo = lo;
  out.hi = hi;
  out.value = 0.5 * (lo + hi);
  return out;
}

}  // namespace affeval
