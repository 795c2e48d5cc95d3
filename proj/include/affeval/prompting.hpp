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

// System prompt templates and chat message assembly.
//
// A template body uses `{name}` placeholders. Sentence-level templates carry
// the answer-format suffix, whose `{label_A}` / `{label_B}` placeholders are
// bound from the task's label_set rather than from prompt_params.

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "affeval/corpus.hpp"

namespace affeval {

enum class SuffixKind { kNone, kBinaryChoice };

struct PromptTemplate {
  std::string prompt_id;
  std::string body;
  SuffixKind suffix_kind = SuffixKind::kNone;
  // Every placeholder of the rendered template, suffix labels included.
  std::set<std::string> placeholders;

  // Placeholders a TaskSpec must bind through prompt_params.
  std::set<std::string> parameter_names() const;
};

struct MessagePair {
  std::string system;
  std::string user;

  bool operator==(const MessagePair&) const = default;
};

// Placeholder names appearing as `{name}` in text, in order of appearance.
std::vector<std::string> find_placeholders(std::string_view text);

// The shared answer-format suffix, unrendered.
std::string_view binary_choice_suffix();

class PromptRegistry {
 public:
  // Registry holding every built-in template.
  static const PromptRegistry& builtin();

  PromptRegistry() = default;

  void add(std::string prompt_id, std::string body, SuffixKind suffix_kind);

  const PromptTemplate& get(std::string_view prompt_id) const;
  bool contains(std::string_view prompt_id) const;
  std::vector<std::string> ids() const;

  // Throws ValidationError when the task's prompt_params keys differ from the
  // template's parameter names or the suffix has no labels to bind.
  void validate_binding(const TaskSpec& spec) const;

  // The template with placeholders substituted and, for suffix templates,
  // the answer-format suffix appended on a new line.
  std::string render_system_prompt(const TaskSpec& spec) const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

// The built-in registry's rendering.
std::string render_system_prompt(const TaskSpec& spec);

// "A: <text_a>\nB: <text_b>"; texts are embedded verbatim.
std::string render_pair_user_message(std::string_view text_a, std::string_view text_b);

}  // namespace affeval
