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

#include "affeval/prompting.hpp"

#include <cctype>

#include "affeval/error.hpp"

namespace affeval {

namespace {

constexpr std::string_view kSuffix =
    "Use the following format:\n"
    "* You are only allowed to answer \"{label_A}\" or \"{label_B}\".\n"
    "* Don't write an explanation of the answer.\n"
    "* Don't write things like \"My guess is...\", or \"I think ...\". "
    "Just write {label_A} or {label_B}, but nothing else.";

constexpr std::string_view kLabelA = "label_A";
constexpr std::string_view kLabelB = "label_B";

struct BuiltinTemplate {
  std::string_view id;
  std::string_view body;
  SuffixKind suffix;
};

// Word-level templates inline their own output format and take no suffix.
constexpr BuiltinTemplate kBuiltins[] = {
    {"aspect-polarity",
     "You are an aspect-based sentiment analysis expert,\n"
     "you will be given a sentence by the user and you will list all the aspect "
     "words target objects.\n"
     "List the words in bullet points.\n"
     "The aspect targets are objects that are classified by a corresponding one of "
     "four sentiment targets: positive, negative, neutral, and conflict.\n"
     "It is possible that a word has no target, which is defined as a background "
     "target.\n"
     "Use the following format:\n"
     "* You will output a list of words in bullet points.\n"
     "* Each bullet point will be on the form: \"word\" is target.\n"
     "* The target is one of the four targets, do not report background targets.\n"
     "* You will not mention any other text like \"My guess is ...\" or \"I think "
     "...\".\n"
     "* If all words have background target, then you return the word "
     "\"BACKGROUND\" without any bullet points.",
     SuffixKind::kNone},
    {"opinion-extraction",
     "You are an aspect-based sentiment analysis expert,\n"
     "you will be given a sentence by the user that contains aspect words objects.\n"
     "Your task is to list all the sentiment opinionated words / expressions, that "
     "are corresponding to the aspect in the text (if any).\n"
     "You just need to list the words/expression in bullet points without "
     "classifying them.\n"
     "There will be many words without sentiment, these should not be listed.\n"
     "Use the following format:\n"
     "* You will output a list of words in bullet points.\n"
     "* Each bullet point will be on the form (without quotations): \"* "
     "expression\"\n"
     "* You should mention words that are explicitly in the text.\n"
     "* You will not mention implied sentiment.\n"
     "* You should mention the words exactly how they are written in the input, "
     "even if they have typos.\n"
     "* You will not mention any other text like \"My guess is ...\" or \"I think "
     "...\".\n"
     "* If all words have no sentiment, then you respond with the word "
     "\"BACKGROUND\" without any bullet points.",
     SuffixKind::kNone},
    {"sentiment-analysis",
     "You are an expert at sentiment analysis.\n"
     "Given a text by the user, analyze the sentiment of the text if it is "
     "'positive' or 'negative'.\n"
     "You are not allowed to answer 'neutral', try to narrow it down to 'positive' "
     "and 'negative'.",
     SuffixKind::kBinaryChoice},
    {"sentiment-ranking",
     "You are an expert at sentiment analysis.\n"
     "Given a pair of texts A and B from the user,\n"
     "you will output which text expresses more positive sentiment.",
     SuffixKind::kBinaryChoice},
    {"emotion-ranking",
     "You are an expert at emotion analysis.\n"
     "Given a pair of texts A and B from the user,\n"
     "you will output which text expresses higher intensity of the {emotion} "
     "emotion.",
     SuffixKind::kBinaryChoice},
    {"suicide-detection",
     "You are an expert at psyche analysis.\n"
     "Given a text by the user, solve the binary classification of analysing if the "
     "text expresses a tendency for suicide.",
     SuffixKind::kBinaryChoice},
    {"toxicity-detection",
     "You are an expert at toxicity analysis.\n"
     "Assume that we have the capability of analysing 6 toxicity traits.\n"
     "\"toxic\", \"severe toxic\", \"obscene\", \"threat\", \"insult\", \"identity "
     "hate\".\n"
     "Your task is to make binary classification for the trait {trait}, and not the "
     "remaining traits.\n"
     "Given a text by the user, estimate if the given text displays the trait "
     "{trait} or not.",
     SuffixKind::kBinaryChoice},
    {"wellbeing-assessment",
     "You are an expert at psyche analysis.\n"
     "Given a text by the user, estimate if the given text talks about a "
     "stress-related topic, or expresses emotional stress be it implicit or "
     "explicit.",
     SuffixKind::kBinaryChoice},
    {"engagement-ranking",
     "You are an expert at social media analysis.\n"
     "Given a pair of texts A and B representing tweets, estimate which text is more "
     "engaging.\n"
     "You will achieve this by estimating which text is more viral,\n"
     "by estimating which one has a higher number of retweets.",
     SuffixKind::kBinaryChoice},
    {"personality-ranking",
     "You are an expert at the big-five personality traits assessment.\n"
     "Given a pair of texts A and B from the user,\n"
     "you will output which text expresses higher intensity of the {trait} trait, "
     "from the big-five OCEAN personality traits.",
     SuffixKind::kBinaryChoice},
    {"sarcasm-detection",
     "You are an expert at sarcasm analysis.\n"
     "Given a text by the user, estimate if the given text is sarcastic or not.",
     SuffixKind::kBinaryChoice},
    {"subjectivity-detection",
     "You are an expert at language and sentiment analysis.\n"
     "The user will give you a text, your task is to make a binary classification on "
     "the text,\n"
     "if the given text is opinionated / subjective / biased, or if it is "
     "non-opinionated / objective / descriptive / factual.\n"
     "Please note that this is about \"how\" the text is described and not \"what\" "
     "it describes,\n"
     "so the text can still \"objectively\" describe a fictional story with some "
     "emotional terms.",
     SuffixKind::kBinaryChoice},
};

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_';
}
bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

// Replaces every `{name}` with values.at(name). Unbound names are left as-is.
std::string substitute(std::string_view text,
                       const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{' && i + 1 < text.size() && is_name_start(text[i + 1])) {
      std::size_t j = i + 1;
      while (j < text.size() && is_name_char(text[j])) ++j;
      if (j < text.size() && text[j] == '}') {
        auto it = values.find(text.substr(i + 1, j - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = j + 1;
          continue;
        }
      }
    }
    out += text[i++];
  }
  return out;
}

std::string join_names(const std::set<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

}  // namespace

std::vector<std::string> find_placeholders(std::string_view text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    if (text[i] != '{' || !is_name_start(text[i + 1])) continue;
    std::size_t j = i + 1;
    while (j < text.size() && is_name_char(text[j])) ++j;
    if (j < text.size() && text[j] == '}') {
      out.emplace_back(text.substr(i + 1, j - i - 1));
      i = j;
    }
  }
  return out;
}

std::string_view binary_choice_suffix() { return kSuffix; }

std::set<std::string> PromptTemplate::parameter_names() const {
  std::set<std::string> out = placeholders;
  if (suffix_kind == SuffixKind::kBinaryChoice) {
    out.erase(std::string(kLabelA));
    out.erase(std::string(kLabelB));
  }
  return out;
}

const PromptRegistry& PromptRegistry::builtin() {
  static const PromptRegistry registry = [] {
    PromptRegistry r;
    for (const auto& t : kBuiltins) {
      r.add(std::string(t.id), std::string(t.body), t.suffix);
    }
    return r;
  }();
  return registry;
}

void PromptRegistry::add(std::string prompt_id, std::string body,
                         SuffixKind suffix_kind) {
  if (prompt_id.empty()) throw InvalidArgument("empty prompt_id");
  PromptTemplate t;
  t.prompt_id = prompt_id;
  t.suffix_kind = suffix_kind;
  for (auto& name : find_placeholders(body)) t.placeholders.insert(std::move(name));
  if (suffix_kind == SuffixKind::kBinaryChoice) {
    for (auto& name : find_placeholders(kSuffix)) t.placeholders.insert(std::move(name));
  }
  t.body = std::move(body);
  if (!templates_.emplace(prompt_id, std::move(t)).second) {
    throw InvalidArgument("duplicate prompt_id '" + prompt_id + "'");
  }
}

const PromptTemplate& PromptRegistry::get(std::string_view prompt_id) const {
  auto it = templates_.find(prompt_id);
  if (it == templates_.end()) {
    throw InvalidArgument("unknown prompt_id '" + std::string(prompt_id) + "'");
  }
  return it->second;
}

bool PromptRegistry::contains(std::string_view prompt_id) const {
  return templates_.find(prompt_id) != templates_.end();
}

std::vector<std::string> PromptRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, t] : templates_) out.push_back(id);
  return out;
}

void PromptRegistry::validate_binding(const TaskSpec& spec) const {
  const PromptTemplate& t = get(spec.prompt_id);
  const std::set<std::string> expected = t.parameter_names();
  std::set<std::string> missing;
  std::set<std::string> unexpected;
  for (const auto& name : expected) {
    if (!spec.prompt_params.contains(name)) missing.insert(name);
  }
  for (const auto& [name, value] : spec.prompt_params) {
    if (!expected.contains(name)) unexpected.insert(name);
  }
  if (!missing.empty()) {
    throw ValidationError("task '" + spec.task_id + "': missing prompt parameter(s): " +
                          join_names(missing));
  }
  if (!unexpected.empty()) {
    throw ValidationError("task '" + spec.task_id +
                          "': unknown prompt parameter(s): " + join_names(unexpected));
  }
  const bool choice_family = spec.family == TaskFamily::kBinaryChoice ||
                             spec.family == TaskFamily::kScalarRanking;
  if (choice_family != (t.suffix_kind == SuffixKind::kBinaryChoice)) {
    throw ValidationError("task '" + spec.task_id + "': prompt '" + spec.prompt_id +
                          "' does not fit family " + std::string(to_string(spec.family)));
  }
  if (t.suffix_kind == SuffixKind::kBinaryChoice && spec.label_set.size() != 2) {
    throw ValidationError("task '" + spec.task_id +
                          "': the answer-format suffix binds exactly two labels");
  }
}

std::string PromptRegistry::render_system_prompt(const TaskSpec& spec) const {
  validate_binding(spec);
  const PromptTemplate& t = get(spec.prompt_id);
  std::map<std::string, std::string, std::less<>> values(spec.prompt_params.begin(),
                                                         spec.prompt_params.end());
  std::string text = t.body;
  if (t.suffix_kind == SuffixKind::kBinaryChoice) {
    values[std::string(kLabelA)] = spec.label_set[0];
    values[std::string(kLabelB)] = spec.label_set[1];
    text += '\n';
    text += kSuffix;
  }
  // Substitution is single pass, so parameter values are never re-expanded.
  return substitute(text, values);
}

std::string render_system_prompt(const TaskSpec& spec) {
  return PromptRegistry::builtin().render_system_prompt(spec);
}

std::string render_pair_user_message(std::string_view text_a, std::string_view text_b) {
  if (text_a.empty() || text_b.empty()) {
    throw InvalidArgument("pair texts must be non-empty");
  }
  std::string out;
  out.reserve(text_a.size() + text_b.size() + 7);
  out += "A: ";
  out += text_a;
  out += "\nB: ";
  out += text_b;
  return out;
}

}  // namespace affeval
