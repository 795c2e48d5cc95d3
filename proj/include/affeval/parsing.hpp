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

// Reply parsing. Every reply maps to exactly one ParsedPrediction; replies
// that do not follow the requested format become an Excluded value, never an
// exception.

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "affeval/corpus.hpp"

namespace affeval {

enum class ExclusionReason {
  kAmbiguous,        // more than one label mentioned
  kNoLabel,          // no label mentioned
  kMalformedBullet,  // a line outside the bullet grammar
  kTransport,        // no reply: the backend gave up
  kProtocol,         // no reply: malformed response envelope
};

std::string_view to_string(ExclusionReason reason);
ExclusionReason parse_exclusion_reason(std::string_view name);

struct WordTarget {
  std::string expression;
  std::string target;  // positive, negative, neutral or conflict

  bool operator==(const WordTarget&) const = default;
};

struct Choice {
  std::string label;  // canonical
  bool operator==(const Choice&) const = default;
};
struct WordTargets {
  std::vector<WordTarget> items;
  bool operator==(const WordTargets&) const = default;
};
struct Expressions {
  std::vector<std::string> items;
  bool operator==(const Expressions&) const = default;
};
struct Excluded {
  ExclusionReason reason;
  bool operator==(const Excluded&) const = default;
};

using ParsedPrediction = std::variant<Choice, WordTargets, Expressions, Excluded>;

inline bool is_excluded(const ParsedPrediction& p) {
  return std::holds_alternative<Excluded>(p);
}

// Pass 1: the canonicalized reply equals a label. Pass 2: exactly one label
// occurs in it as a whole word sequence. Otherwise ambiguous / no-label.
ParsedPrediction parse_choice(std::string_view reply,
                              std::span<const std::string> label_set);

// Bullets of the form `* "<expression>" is <target>`, or a bare BACKGROUND.
ParsedPrediction parse_word_targets(std::string_view reply);

// Bullets of the form `* <expression>`, or a bare BACKGROUND.
ParsedPrediction parse_expressions(std::string_view reply);

// Dispatches on the task family.
ParsedPrediction parse_reply(const TaskSpec& spec, std::string_view reply);

struct TokenPrediction {
  std::vector<std::string> tags;
  std::size_t unmatched = 0;  // predicted expressions found nowhere in words
};

// Starts every word at default_tag, then tags each case-insensitive
// contiguous occurrence of each predicted expression, left to right without
// overlap. Words claimed by an earlier expression are not re-tagged.
TokenPrediction align_to_tokens(const ParsedPrediction& prediction,
                                std::span<const std::string> words,
                                std::string_view default_tag = kBackgroundTag);

// Maps a polarity tag onto a task's scoring classes: with classes
// {aspect, background}, every non-background tag becomes "aspect".
std::string project_tag(std::string_view tag, std::span<const std::string> classes);

}  // namespace affeval
