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

#include "affeval/fixtures.hpp"

#include <cstdio>
#include <numeric>

#include "affeval/error.hpp"
#include "affeval/random.hpp"

namespace affeval {

namespace {

const std::vector<std::string> kFiller = {"the",  "staff", "menu", "screen", "price",
                                          "food", "was",   "keys", "room",   "day"};

Corpus synth_choice(const TaskSpec& spec, std::size_t n, Rng& rng) {
  const auto labels = spec.canonical_labels();
  std::vector<std::string> assigned(n);
  for (std::size_t i = 0; i < n; ++i) assigned[i] = labels[i % labels.size()];
  shuffle(assigned, rng);

  std::vector<Example> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string text = "sample " + std::to_string(i);
    const std::size_t extra = 2 + uniform_index(rng, 6);
    for (std::size_t k = 0; k < extra; ++k) {
      text += ' ';
      text += kFiller[uniform_index(rng, kFiller.size())];
    }
    out.push_back({synth_id("ex", i), text, assigned[i], Split::kTest});
  }
  return Corpus(std::move(out));
}

Corpus synth_tokens(const TaskSpec& spec, std::size_t n, Rng& rng) {
  static const std::vector<std::string> polarity = {"positive", "negative", "neutral",
                                                    "conflict"};
  const bool opinion = spec.family == TaskFamily::kExpressionExtraction;
  std::vector<TokenExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    TokenExample ex;
    ex.id = synth_id("tok", i);
    const std::size_t len = 3 + uniform_index(rng, 10);
    // Roughly one sentence in five has no target at all.
    const bool empty = uniform_index(rng, 5) == 0;
    std::size_t j = 0;
    while (j < len) {
      if (!empty && uniform01(rng) < 0.25) {
        const std::size_t span = std::min<std::size_t>(1 + uniform_index(rng, 3), len - j);
        const std::string tag =
            opinion ? "opinion" : polarity[uniform_index(rng, polarity.size())];
        for (std::size_t k = 0; k < span; ++k, ++j) {
          ex.words.push_back("w" + std::to_string(i) + "x" + std::to_string(j));
          ex.tags.push_back(tag);
        }
      } else {
        ex.words.push_back("w" + std::to_string(i) + "x" + std::to_string(j));
        ex.tags.emplace_back(kBackgroundTag);
        ++j;
      }
    }
    out.push_back(std::move(ex));
  }
  return Corpus(std::move(out));
}

Corpus synth_scalar(const TaskSpec& spec, std::size_t n, Rng& rng) {
  const double lo = spec.score_range.lo.value_or(0.0);
  const double hi = spec.score_range.hi.value_or(lo + 5.0);
  if (!(hi > lo)) throw InvalidArgument("score range of '" + spec.task_id + "' is empty");
  std::vector<std::size_t> rank(n);
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  shuffle(rank, rng);

  std::vector<ScalarExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double score =
        lo + (hi - lo) * (static_cast<double>(rank[i]) + 0.5) / static_cast<double>(n);
    out.push_back({synth_id("sc", i), "item " + std::to_string(i) + " " +
                                          kFiller[uniform_index(rng, kFiller.size())],
                   score, Split::kTest});
  }
  return Corpus(std::move(out));
}

}  // namespace

std::string synth_id(std::string_view prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "-%06zu", index);
  return std::string(prefix) + buf;
}

Corpus synth_corpus(const TaskSpec& spec, std::size_t n, std::uint64_t seed) {
  validate_task_structure(spec);
  Rng rng = make_rng(derive_seed(seed, "synth:" + spec.task_id));
  switch (spec.family) {
    case TaskFamily::kBinaryChoice:
      return synth_choice(spec, n, rng);
    case TaskFamily::kTokenTagging:
    case TaskFamily::kExpressionExtraction:
      return synth_tokens(spec, n, rng);
    case TaskFamily::kScalarRanking:
      return synth_scalar(spec, n, rng);
  }
  throw InvalidArgument("unknown task family");
}

}  // namespace affeval
