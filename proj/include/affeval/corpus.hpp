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

// Task definitions and the normalized corpus data model.
//
// A corpus file holds one JSON object per line. The record shape depends on
// the task family:
//
//   binary-choice          {"id", "text", "label"}
//   token-tagging          {"id", "words", "tags"}
//   expression-extraction  {"id", "words", "tags"}
//   scalar-ranking         {"id", "text", "score"}
//
// Every record may carry an optional "split" field ("train", "dev", "test";
// default "test"). Unknown fields are rejected.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace affeval {

enum class TaskFamily {
  kBinaryChoice,
  kTokenTagging,
  kExpressionExtraction,
  kScalarRanking,
};

std::string_view to_string(TaskFamily family);
TaskFamily parse_task_family(std::string_view name);

enum class Split { kTrain, kDev, kTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

// Closed interval [lo, hi]; an absent bound is unbounded.
struct ScoreRange {
  std::optional<double> lo;
  std::optional<double> hi;

  bool contains(double v) const {
    return (!lo || v >= *lo) && (!hi || v <= *hi);
  }
};

struct TaskSpec {
  std::string task_id;
  TaskFamily family = TaskFamily::kBinaryChoice;
  // Display form, in prompt order. The first entry is rendered as label A.
  std::vector<std::string> label_set;
  std::string prompt_id;
  std::map<std::string, std::string> prompt_params;
  ScoreRange score_range;
  // Row labels for the results matrix. An empty group falls back to task_id.
  std::string group;
  std::string sub_label;

  // Canonical forms of label_set, same order.
  std::vector<std::string> canonical_labels() const;
};

// Checks the family-level invariants of a task. Prompt bindings are checked
// by the prompt registry.
void validate_task_structure(const TaskSpec& spec);

// Accepts a single task object, an array of tasks, or {"tasks": [...]}.
std::vector<TaskSpec> load_task_specs(const std::filesystem::path& path);
std::vector<TaskSpec> parse_task_specs(std::string_view json_text);
const TaskSpec& find_task(const std::vector<TaskSpec>& specs,
                          std::string_view task_id);

// Lowercase, with surrounding whitespace and quotation marks removed.
std::string canonical_label(std::string_view label);

// Tags allowed in token-level records.
const std::vector<std::string>& aspect_tags();   // polarity tags + background
const std::vector<std::string>& opinion_tags();  // opinion, background
inline constexpr std::string_view kBackgroundTag = "background";

struct Example {
  std::string id;
  std::string text;
  std::string label;  // canonical
  Split split = Split::kTest;

  bool operator==(const Example&) const = default;
};

struct TokenExample {
  std::string id;
  std::vector<std::string> words;
  std::vector<std::string> tags;  // canonical
  Split split = Split::kTest;

  std::string text() const;  // words joined by single spaces
  bool operator==(const TokenExample&) const = default;
};

struct ScalarExample {
  std::string id;
  std::string text;
  double score = 0.0;
  Split split = Split::kTest;

  bool operator==(const ScalarExample&) const = default;
};

struct CorpusSplit {
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;

  std::size_t train_count() const { return train.size(); }
  std::size_t dev_count() const { return dev.size(); }
  std::size_t test_count() const { return test.size(); }
};

class Corpus {
 public:
  using Records = std::variant<std::vector<Example>, std::vector<TokenExample>,
                               std::vector<ScalarExample>>;

  Corpus() = default;
  explicit Corpus(std::vector<Example> records);
  explicit Corpus(std::vector<TokenExample> records);
  explicit Corpus(std::vector<ScalarExample> records);

  const Records& records() const { return records_; }

  const std::vector<Example>& examples() const;
  const std::vector<TokenExample>& token_examples() const;
  const std::vector<ScalarExample>& scalar_examples() const;

  std::size_t size() const;
  std::vector<std::string> ids() const;
  CorpusSplit split() const;

  // Records of one split, in file order.
  Corpus only(Split split) const;
  // Records at the given (ascending) positions.
  Corpus subset(const std::vector<std::size_t>& positions) const;

  bool operator==(const Corpus&) const = default;

 private:
  Records records_;
};

Corpus load_corpus(const std::filesystem::path& path, const TaskSpec& spec);
Corpus parse_corpus(std::istream& in, const TaskSpec& spec);

void write_corpus(std::ostream& out, const Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

// Uniform sample of n records without replacement, deterministic per seed.
// Retained records keep their original relative order.
Corpus downsample(const Corpus& corpus, std::size_t n, std::uint64_t seed);

// log10(retweet_count + 1).
double engagement_score(std::int64_t retweet_count);

}  // namespace affeval
