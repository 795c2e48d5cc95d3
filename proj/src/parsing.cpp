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

#include "affeval/parsing.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>

#include "affeval/error.hpp"

namespace affeval {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_quote(char c) { return c == '"' || c == '\'' || c == '`'; }
bool is_terminal_punct(char c) {
  return c == '.' || c == '!' || c == '?' || c == ';' || c == ':' || c == ',';
}
bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

// Lowercase; surrounding whitespace, quotes and terminal punctuation removed.
std::string canonical_reply(std::string_view reply) {
  std::size_t b = 0;
  std::size_t e = reply.size();
  for (;;) {
    const std::size_t b0 = b;
    const std::size_t e0 = e;
    while (b < e && is_space(reply[b])) ++b;
    while (e > b && is_space(reply[e - 1])) --e;
    while (e > b && is_terminal_punct(reply[e - 1])) --e;
    if (b < e && is_quote(reply[b])) ++b;
    if (e > b && is_quote(reply[e - 1])) --e;
    if (b == b0 && e == e0) break;
  }
  return lower(reply.substr(b, e - b));
}

bool is_background(std::string_view reply) {
  return canonical_reply(reply) == "background";
}

std::vector<std::string_view> non_blank_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(start, end - start));
    if (!line.empty()) out.push_back(line);
    start = end + 1;
  }
  return out;
}

struct Span {
  std::size_t begin;
  std::size_t end;
};

// Whole-word occurrences of needle in haystack.
std::vector<Span> occurrences(const std::string& haystack, const std::string& needle) {
  std::vector<Span> out;
  if (needle.empty()) return out;
  for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + 1)) {
    const std::size_t end = pos + needle.size();
    const bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]) ||
                         !is_word_char(needle.front());
    const bool right_ok = end == haystack.size() || !is_word_char(haystack[end]) ||
                          !is_word_char(needle.back());
    if (left_ok && right_ok) out.push_back({pos, end});
  }
  return out;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(lower(w));
  return out;
}

const std::set<std::string>& polarity_targets() {
  static const std::set<std::string> targets = {"positive", "negative", "neutral",
                                                "conflict"};
  return targets;
}

}  // namespace

std::string_view to_string(ExclusionReason reason) {
  switch (reason) {
    case ExclusionReason::kAmbiguous:
      return "ambiguous";
    case ExclusionReason::kNoLabel:
      return "no-label";
    case ExclusionReason::kMalformedBullet:
      return "malformed-bullet";
    case ExclusionReason::kTransport:
      return "transport";
    case ExclusionReason::kProtocol:
      return "protocol";
  }
  return "unknown";
}

ExclusionReason parse_exclusion_reason(std::string_view name) {
  for (auto r : {ExclusionReason::kAmbiguous, ExclusionReason::kNoLabel,
                 ExclusionReason::kMalformedBullet, ExclusionReason::kTransport,
                 ExclusionReason::kProtocol}) {
    if (to_string(r) == name) return r;
  }
  throw InvalidArgument("unknown exclusion reason '" + std::string(name) + "'");
}

ParsedPrediction parse_choice(std::string_view reply,
                              std::span<const std::string> label_set) {
  std::vector<std::string> labels;
  labels.reserve(label_set.size());
  for (const auto& l : label_set) labels.push_back(canonical_label(l));

  const std::string canon = canonical_reply(reply);
  for (const auto& l : labels) {
    if (canon == l) return Choice{l};
  }

  // A label counts only where its occurrence is not inside an occurrence of a
  // longer matching label ("toxic" within "severe toxic").
  std::vector<std::vector<Span>> found(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) found[i] = occurrences(canon, labels[i]);
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool standalone = std::any_of(found[i].begin(), found[i].end(), [&](Span s) {
      for (std::size_t j = 0; j < labels.size(); ++j) {
        if (j == i || labels[j].size() <= labels[i].size()) continue;
        for (Span t : found[j]) {
          if (t.begin <= s.begin && s.end <= t.end) return false;
        }
      }
      return true;
    });
    if (standalone) present.push_back(i);
  }
  if (present.size() == 1) return Choice{labels[present.front()]};
  return Excluded{present.empty() ? ExclusionReason::kNoLabel
                                  : ExclusionReason::kAmbiguous};
}

ParsedPrediction parse_word_targets(std::string_view reply) {
  if (is_background(reply)) return WordTargets{};
  static const std::regex bullet(R"re(^\*\s*"(.+)"\s+is\s+([A-Za-z]+)\s*\.?$)re");
  const auto lines = non_blank_lines(reply);
  if (lines.empty()) return Excluded{ExclusionReason::kMalformedBullet};
  WordTargets out;
  for (std::string_view line : lines) {
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_match(line.begin(), line.end(), m, bullet)) {
      return Excluded{ExclusionReason::kMalformedBullet};
    }
    const std::string expression(trim(std::string_view(&*m[1].first, m[1].length())));
    const std::string target = lower(std::string_view(&*m[2].first, m[2].length()));
    if (expression.empty() || !polarity_targets().contains(target)) {
      return Excluded{ExclusionReason::kMalformedBullet};
    }
    out.items.push_back({expression, target});
  }
  return out;
}

ParsedPrediction parse_expressions(std::string_view reply) {
  if (is_background(reply)) return Expressions{};
  const auto lines = non_blank_lines(reply);
  if (lines.empty()) return Excluded{ExclusionReason::kMalformedBullet};
  Expressions out;
  for (std::string_view line : lines) {
    if (line.front() != '*') return Excluded{ExclusionReason::kMalformedBullet};
    const std::string_view expression = trim(line.substr(1));
    if (expression.empty()) return Excluded{ExclusionReason::kMalformedBullet};
    out.items.emplace_back(expression);
  }
  return out;
}

ParsedPrediction parse_reply(const TaskSpec& spec, std::string_view reply) {
  switch (spec.family) {
    case TaskFamily::kBinaryChoice:
    case TaskFamily::kScalarRanking:
      return parse_choice(reply, spec.label_set);
    case TaskFamily::kTokenTagging:
      return parse_word_targets(reply);
    case TaskFamily::kExpressionExtraction:
      return parse_expressions(reply);
  }
  return Excluded{ExclusionReason::kMalformedBullet};
}

TokenPrediction align_to_tokens(const ParsedPrediction& prediction,
                                std::span<const std::string> words,
                                std::string_view default_tag) {
  std::vector<std::pair<std::string, std::string>> items;  // (expression, tag)
  if (const auto* wt = std::get_if<WordTargets>(&prediction)) {
    for (const auto& item : wt->items) items.emplace_back(item.expression, item.target);
  } else if (const auto* ex = std::get_if<Expressions>(&prediction)) {
    for (const auto& item : ex->items) items.emplace_back(item, "opinion");
  } else {
    throw InvalidArgument("align_to_tokens needs word targets or expressions");
  }

  std::vector<std::string> lowered;
  lowered.reserve(words.size());
  for (const auto& w : words) lowered.push_back(lower(w));

  TokenPrediction out;
  out.tags.assign(words.size(), std::string(default_tag));
  std::vector<bool> claimed(words.size(), false);
  for (const auto& [expression, tag] : items) {
    const auto needle = split_words(expression);
    bool matched = false;
    if (!needle.empty() && needle.size() <= words.size()) {
      std::size_t i = 0;
      while (i + needle.size() <= words.size()) {
        bool hit = true;
        for (std::size_t k = 0; k < needle.size() && hit; ++k) {
          hit = !claimed[i + k] && lowered[i + k] == needle[k];
        }
        if (!hit) {
          ++i;
          continue;
        }
        for (std::size_t k = 0; k < needle.size(); ++k) {
          out.tags[i + k] = tag;
          claimed[i + k] = true;
        }
        matched = true;
        i += needle.size();
      }
    }
    if (!matched) ++out.unmatched;
  }
  return out;
}

std::string project_tag(std::string_view tag, std::span<const std::string> classes) {
  const bool presence = std::find(classes.begin(), classes.end(), "aspect") != classes.end();
  if (presence && tag != kBackgroundTag) return "aspect";
  return std::string(tag);
}

}  // namespace affeval
