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

// Run orchestration. A run directory holds:
//   pairs.jsonl        scalar-ranking only: the sampled pair instances
//   transcript.jsonl   every exchange, in example order
//   predictions.jsonl  parsed prediction per exchange
//   parse_report.json  exclusion totals by reason
//   results.tsv        metrics; rebuilt byte-for-byte by score_run
//   manifest.json      everything needed to reconstruct the run

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "affeval/backend.hpp"
#include "affeval/corpus.hpp"
#include "affeval/jsonl.hpp"
#include "affeval/metrics.hpp"
#include "affeval/pairrank.hpp"
#include "affeval/parsing.hpp"

namespace affeval {

struct Seeds {
  std::uint64_t sampling = 0;      // downsampling and pair graph
  std::uint64_t presentation = 0;  // A/B order of pairs
  std::uint64_t permutation = 0;   // significance tests

  static Seeds from(std::uint64_t seed);
};

struct RunCounts {
  std::size_t total = 0;
  std::size_t scored = 0;
  std::size_t excluded = 0;
};

struct RunManifest {
  std::string run_id;
  std::string task_id;
  std::string group;
  std::string sub_label;
  std::string system;
  OrderedJson backend;
  Seeds seeds;
  RunCounts counts;
  std::string corpus_fingerprint;
  OrderedJson pairs;  // null unless scalar-ranking
  std::map<std::string, std::string> artifacts;  // relative to the run dir
  OrderedJson config;                            // effective settings
  std::string created_at;

  OrderedJson to_json() const;
  static RunManifest from_json(const OrderedJson& j);
};

RunManifest load_manifest(const std::filesystem::path& run_dir);

struct RunOptions {
  std::filesystem::path out_dir;
  Seeds seeds;
  std::size_t pairs_multiplier = kDefaultPairsMultiplier;
  std::optional<std::size_t> downsample;
  BatchOptions batch;
  OrderedJson config = OrderedJson::object();
};

// Gold and prediction for one exchange, after parsing and alignment.
struct ScoredItem {
  std::string example_id;
  bool excluded = false;
  ExclusionReason reason = ExclusionReason::kNoLabel;
  // One entry per scored unit: a single label for choice families, one tag
  // per word for token families. Already projected onto the task classes.
  std::vector<std::string> gold;
  std::vector<std::string> predicted;
  std::size_t unmatched = 0;
};

struct ScoreSummary {
  std::vector<ScoredItem> items;
  ConfusionMatrix matrix;
  RunCounts counts;
  std::map<ExclusionReason, std::size_t> reasons;
  std::size_t unmatched = 0;
};

// Classes metrics are computed over.
std::vector<std::string> scoring_classes(const TaskSpec& spec);

// Pure scoring of transcript records. Pair gold comes from `pairs`; other
// families look gold up in the corpus by example id.
ScoreSummary score_records(const TaskSpec& spec, const Corpus& corpus,
                           std::span<const PairInstance> pairs,
                           std::span<const TranscriptRecord> records);

std::string format_results(const TaskSpec& spec, const ScoreSummary& summary);

// Re-scores <run_dir>/transcript.jsonl and rewrites predictions.jsonl,
// parse_report.json and results.tsv.
ScoreSummary score_run(const TaskSpec& spec, const Corpus& corpus,
                       const std::filesystem::path& run_dir);

// Pair instances for a scalar corpus, restricted to its test split.
PairBuild make_pairs(const Corpus& corpus, std::size_t multiplier, const Seeds& seeds);

RunManifest run_task(const TaskSpec& spec, const Corpus& corpus, ChatBackend& backend,
                     const RunOptions& options);

struct MetricComparison {
  std::string metric;  // accuracy or uar
  double score_a = 0.0;
  double score_b = 0.0;
  std::size_t intersection = 0;
  SignificanceResult significance;
};

// Per-example vectors whose means equal accuracy and UAR over the given
// items. Token items contribute their pooled share of the counts.
struct MetricVectors {
  std::vector<std::string> keys;
  std::vector<double> accuracy;
  std::vector<double> uar;
};
MetricVectors metric_vectors(std::span<const ScoredItem> items,
                             const std::vector<std::string>& classes);

std::vector<ScoredItem> load_predictions(const std::filesystem::path& run_dir);

// Paired comparison on the examples scored by both runs.
std::vector<MetricComparison> compare_runs(const std::filesystem::path& run_a,
                                           const std::filesystem::path& run_b,
                                           const TaskSpec& spec,
                                           const PermutationOptions& options);
std::string format_comparison(const RunManifest& a, const RunManifest& b,
                              const std::vector<MetricComparison>& rows);

// Rows are (group, sub_label) in first-seen order; columns are systems with
// the baseline first. Non-baseline cells carry stars from a paired test
// against the baseline run of the same task.
struct ReportTables {
  std::string text;
  std::string tsv;
};
ReportTables build_report(const std::vector<std::filesystem::path>& run_dirs,
                          const std::vector<TaskSpec>& catalog,
                          const std::string& baseline_system,
                          const PermutationOptions& options);

// Layered settings: CLI flags over AFFEVAL_<NAME> environment variables over
// a JSON config file over built-in defaults.
struct Setting {
  std::string value;
  std::string source;  // cli, env, file or default
};
class Settings {
 public:
  Settings(std::map<std::string, std::string> cli, std::map<std::string, std::string> env,
           Json file);

  // Reads AFFEVAL_<NAME> for every name in `names`.
  static std::map<std::string, std::string> environment(
      const std::vector<std::string>& names);
  static std::string env_name(const std::string& name);

  Setting get(const std::string& name, const std::string& fallback);
  std::optional<Setting> find(const std::string& name);

  // Every value resolved so far, with its source.
  OrderedJson effective() const;

 private:
  std::map<std::string, std::string> cli_;
  std::map<std::string, std::string> env_;
  Json file_;
  std::map<std::string, Setting> resolved_;
};

std::string format_fixed(double v, int precision = 6);

}  // namespace affeval
