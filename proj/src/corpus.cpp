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

#include "affeval/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "affeval/error.hpp"
#include "affeval/jsonl.hpp"
#include "affeval/random.hpp"

namespace affeval {

namespace {

bool is_quote(char c) { return c == '"' || c == '\'' || c == '`'; }

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

template <typename T>
const std::vector<T>& get_records(const Corpus::Records& records,
                                  const char* what) {
  if (const auto* v = std::get_if<std::vector<T>>(&records)) return *v;
  throw InvalidArgument(std::string("corpus does not hold ") + what + " records");
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

Split read_split(RecordReader& reader) {
  if (!reader.has("split")) return Split::kTest;
  const std::string name = reader.string("split");
  try {
    return parse_split(name);
  } catch (const InvalidArgument&) {
    throw IngestionError(reader.line(), "split", "unknown split '" + name + "'");
  }
}

void write_common(OrderedJson& j, Split split) {
  if (split != Split::kTest) j["split"] = std::string(to_string(split));
}

TaskSpec parse_one_task(const Json& j, std::size_t index) {
  if (!j.is_object()) {
    throw ValidationError("task entry " + std::to_string(index) +
                          " is not an object");
  }
  TaskSpec spec;
  try {
    RecordReader r(j, index);
    spec.task_id = r.string("task_id");
    spec.family = parse_task_family(r.string("family"));
    spec.prompt_id = r.string("prompt_id");
    if (r.has("label_set")) spec.label_set = r.string_list("label_set");
    if (r.has("prompt_params")) {
      const Json& params = r.raw("prompt_params");
      if (!params.is_object()) {
        throw IngestionError(index, "prompt_params", "expected an object");
      }
      for (const auto& [key, value] : params.items()) {
        if (!value.is_string()) {
          throw IngestionError(index, "prompt_params", "values must be strings");
        }
        spec.prompt_params[key] = value.get<std::string>();
      }
    }
    if (r.has("score_range")) {
      const Json& range = r.raw("score_range");
      if (!range.is_array() || range.size() != 2) {
        throw IngestionError(index, "score_range", "expected [lo, hi]");
      }
      for (int k = 0; k < 2; ++k) {
        if (range[k].is_null()) continue;
        if (!range[k].is_number()) {
          throw IngestionError(index, "score_range", "bounds must be numbers or null");
        }
        (k == 0 ? spec.score_range.lo : spec.score_range.hi) = range[k].get<double>();
      }
    }
    if (r.has("group")) spec.group = r.string("group");
    if (r.has("sub_label")) spec.sub_label = r.string("sub_label");
    r.finish();
  } catch (const InvalidArgument& e) {
    throw ValidationError("task entry " + std::to_string(index) + ": " + e.what());
  } catch (const IngestionError& e) {
    throw ValidationError("task entry " + std::to_string(index) + ": " +
                          (e.field().empty() ? "" : "field '" + e.field() + "': ") +
                          e.what());
  }

  if (spec.label_set.empty()) {
    switch (spec.family) {
      case TaskFamily::kScalarRanking:
        spec.label_set = {"A", "B"};
        break;
      case TaskFamily::kTokenTagging:
        spec.label_set = aspect_tags();
        break;
      case TaskFamily::kExpressionExtraction:
        spec.label_set = opinion_tags();
        break;
      case TaskFamily::kBinaryChoice:
        break;
    }
  }
  validate_task_structure(spec);
  return spec;
}

}  // namespace

std::string_view to_string(TaskFamily family) {
  switch (family) {
    case TaskFamily::kBinaryChoice:
      return "binary-choice";
    case TaskFamily::kTokenTagging:
      return "token-tagging";
    case TaskFamily::kExpressionExtraction:
      return "expression-extraction";
    case TaskFamily::kScalarRanking:
      return "scalar-ranking";
  }
  return "unknown";
}

TaskFamily parse_task_family(std::string_view name) {
  for (auto f : {TaskFamily::kBinaryChoice, TaskFamily::kTokenTagging,
                 TaskFamily::kExpressionExtraction, TaskFamily::kScalarRanking}) {
    if (to_string(f) == name) return f;
  }
  throw InvalidArgument("unknown task family '" + std::string(name) + "'");
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "unknown";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw InvalidArgument("unknown split '" + std::string(name) + "'");
}

std::string canonical_label(std::string_view label) {
  std::size_t b = 0;
  std::size_t e = label.size();
  for (;;) {
    const std::size_t b0 = b;
    const std::size_t e0 = e;
    while (b < e && is_space(label[b])) ++b;
    while (e > b && is_space(label[e - 1])) --e;
    if (b < e && is_quote(label[b])) ++b;
    if (e > b && is_quote(label[e - 1])) --e;
    if (b == b0 && e == e0) break;
  }
  std::string out(label.substr(b, e - b));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const std::vector<std::string>& aspect_tags() {
  static const std::vector<std::string> tags = {"positive", "negative", "neutral",
                                                "conflict", "background"};
  return tags;
}

const std::vector<std::string>& opinion_tags() {
  static const std::vector<std::string> tags = {"opinion", "background"};
  return tags;
}

std::vector<std::string> TaskSpec::canonical_labels() const {
  std::vector<std::string> out;
  out.reserve(label_set.size());
  for (const auto& l : label_set) out.push_back(canonical_label(l));
  return out;
}

void validate_task_structure(const TaskSpec& spec) {
  if (spec.task_id.empty()) throw ValidationError("task_id is empty");
  if (spec.prompt_id.empty()) {
    throw ValidationError("task '" + spec.task_id + "': prompt_id is empty");
  }
  const auto labels = spec.canonical_labels();
  const std::set<std::string> distinct(labels.begin(), labels.end());
  if (distinct.size() != labels.size() || distinct.contains("")) {
    throw ValidationError("task '" + spec.task_id +
                          "': label_set entries must be distinct and non-empty");
  }
  const auto as_set = [](const std::vector<std::string>& v) {
    return std::set<std::string>(v.begin(), v.end());
  };
  switch (spec.family) {
    case TaskFamily::kBinaryChoice:
      if (labels.size() < 2) {
        throw ValidationError("task '" + spec.task_id +
                              "': binary-choice needs at least two labels");
      }
      break;
    case TaskFamily::kScalarRanking:
      if (spec.label_set != std::vector<std::string>{"A", "B"}) {
        throw ValidationError("task '" + spec.task_id +
                              "': scalar-ranking label_set must be [\"A\", \"B\"]");
      }
      break;
    case TaskFamily::kTokenTagging:
      if (distinct != as_set(aspect_tags()) &&
          distinct != std::set<std::string>{"aspect", "background"}) {
        throw ValidationError(
            "task '" + spec.task_id +
            "': token-tagging label_set must be the polarity tags or "
            "[aspect, background]");
      }
      break;
    case TaskFamily::kExpressionExtraction:
      if (distinct != as_set(opinion_tags())) {
        throw ValidationError("task '" + spec.task_id +
                              "': expression-extraction label_set must be "
                              "[opinion, background]");
      }
      break;
  }
  if (spec.score_range.lo && spec.score_range.hi &&
      *spec.score_range.lo > *spec.score_range.hi) {
    throw ValidationError("task '" + spec.task_id + "': empty score_range");
  }
}

std::vector<TaskSpec> parse_task_specs(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("task spec: invalid JSON: ") + e.what());
  }
  if (doc.is_object() && doc.contains("tasks")) {
    if (doc.size() != 1) throw ValidationError("task spec: unknown top-level field");
    doc = doc["tasks"];
  }
  std::vector<TaskSpec> specs;
  if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      specs.push_back(parse_one_task(doc[i], i + 1));
    }
  } else {
    specs.push_back(parse_one_task(doc, 1));
  }
  std::set<std::string> ids;
  for (const auto& s : specs) {
    if (!ids.insert(s.task_id).second) {
      throw ValidationError("duplicate task_id '" + s.task_id + "'");
    }
  }
  return specs;
}

std::vector<TaskSpec> load_task_specs(const std::filesystem::path& path) {
  return parse_task_specs(read_file(path));
}

const TaskSpec& find_task(const std::vector<TaskSpec>& specs,
                          std::string_view task_id) {
  for (const auto& s : specs) {
    if (s.task_id == task_id) return s;
  }
  throw InvalidArgument("no task '" + std::string(task_id) + "' in task spec file");
}

std::string TokenExample::text() const {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

Corpus::Corpus(std::vector<Example> records) : records_(std::move(records)) {}
Corpus::Corpus(std::vector<TokenExample> records) : records_(std::move(records)) {}
Corpus::Corpus(std::vector<ScalarExample> records) : records_(std::move(records)) {}

const std::vector<Example>& Corpus::examples() const {
  return get_records<Example>(records_, "sentence-level");
}
const std::vector<TokenExample>& Corpus::token_examples() const {
  return get_records<TokenExample>(records_, "token-level");
}
const std::vector<ScalarExample>& Corpus::scalar_examples() const {
  return get_records<ScalarExample>(records_, "scalar");
}

std::size_t Corpus::size() const {
  return std::visit([](const auto& v) { return v.size(); }, records_);
}

std::vector<std::string> Corpus::ids() const {
  return std::visit(
      [](const auto& v) {
        std::vector<std::string> out;
        out.reserve(v.size());
        for (const auto& r : v) out.push_back(r.id);
        return out;
      },
      records_);
}

CorpusSplit Corpus::split() const {
  CorpusSplit out;
  std::visit(
      [&](const auto& v) {
        for (const auto& r : v) {
          switch (r.split) {
            case Split::kTrain:
              out.train.push_back(r.id);
              break;
            case Split::kDev:
              out.dev.push_back(r.id);
              break;
            case Split::kTest:
              out.test.push_back(r.id);
              break;
          }
        }
      },
      records_);
  return out;
}

Corpus Corpus::only(Split split) const {
  return std::visit(
      [&](const auto& v) {
        std::decay_t<decltype(v)> kept;
        for (const auto& r : v) {
          if (r.split == split) kept.push_back(r);
        }
        return Corpus(std::move(kept));
      },
      records_);
}

Corpus Corpus::subset(const std::vector<std::size_t>& positions) const {
  return std::visit(
      [&](const auto& v) {
        std::decay_t<decltype(v)> kept;
        kept.reserve(positions.size());
        for (std::size_t p : positions) {
          if (p >= v.size()) throw InvalidArgument("subset position out of range");
          kept.push_back(v[p]);
        }
        return Corpus(std::move(kept));
      },
      records_);
}

Corpus parse_corpus(std::istream& in, const TaskSpec& spec) {
  const auto labels = spec.canonical_labels();
  const std::set<std::string> label_lookup(labels.begin(), labels.end());
  const auto& tag_set =
      spec.family == TaskFamily::kExpressionExtraction ? opinion_tags() : aspect_tags();
  const std::set<std::string> tag_lookup(tag_set.begin(), tag_set.end());

  std::vector<Example> examples;
  std::vector<TokenExample> token_examples;
  std::vector<ScalarExample> scalar_examples;
  std::set<std::string> seen_ids;

  for_each_record(in, [&](std::size_t line, const Json& j) {
    RecordReader r(j, line);
    std::string id = r.string("id");
    if (id.empty()) throw IngestionError(line, "id", "empty id");
    const Split split = read_split(r);

    switch (spec.family) {
      case TaskFamily::kBinaryChoice: {
        Example ex{id, r.string("text"), canonical_label(r.string("label")), split};
        r.finish();
        if (ex.text.empty()) throw IngestionError(line, "text", "empty text");
        if (!label_lookup.contains(ex.label)) {
          throw ValidationError("line " + std::to_string(line) + ": label '" +
                                ex.label + "' not in label_set {" +
                                join_list(labels) + "}");
        }
        examples.push_back(std::move(ex));
        break;
      }
      case TaskFamily::kTokenTagging:
      case TaskFamily::kExpressionExtraction: {
        TokenExample ex{id, r.string_list("words"), r.string_list("tags"), split};
        r.finish();
        if (ex.words.empty()) throw IngestionError(line, "words", "empty word list");
        if (ex.words.size() != ex.tags.size()) {
          throw ValidationError("line " + std::to_string(line) + ": " +
                                std::to_string(ex.words.size()) + " words but " +
                                std::to_string(ex.tags.size()) + " tags");
        }
        for (auto& t : ex.tags) {
          t = canonical_label(t);
          if (!tag_lookup.contains(t)) {
            throw ValidationError("line " + std::to_string(line) + ": tag '" + t +
                                  "' not in {" + join_list(tag_set) + "}");
          }
        }
        for (const auto& w : ex.words) {
          if (w.empty() || std::any_of(w.begin(), w.end(), is_space)) {
            throw IngestionError(line, "words", "words must be non-empty and contain "
                                                "no whitespace");
          }
        }
        token_examples.push_back(std::move(ex));
        break;
      }
      case TaskFamily::kScalarRanking: {
        ScalarExample ex{id, r.string("text"), r.number("score"), split};
        r.finish();
        if (ex.text.empty()) throw IngestionError(line, "text", "empty text");
        if (!std::isfinite(ex.score) || !spec.score_range.contains(ex.score)) {
          throw ValidationError("line " + std::to_string(line) + ": score " +
                                std::to_string(ex.score) +
                                " outside the declared range");
        }
        scalar_examples.push_back(std::move(ex));
        break;
      }
    }
    // An id listed twice would belong to two splits (or one split twice).
    if (!seen_ids.insert(id).second) {
      throw ValidationError("line " + std::to_string(line) + ": duplicate id '" +
                            id + "'");
    }
  });

  switch (spec.family) {
    case TaskFamily::kBinaryChoice:
      return Corpus(std::move(examples));
    case TaskFamily::kTokenTagging:
    case TaskFamily::kExpressionExtraction:
      return Corpus(std::move(token_examples));
    case TaskFamily::kScalarRanking:
      return Corpus(std::move(scalar_examples));
  }
  return Corpus();
}

Corpus load_corpus(const std::filesystem::path& path, const TaskSpec& spec) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path.string());
  return parse_corpus(in, spec);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  std::visit(
      [&](const auto& v) {
        using T = typename std::decay_t<decltype(v)>::value_type;
        for (const auto& r : v) {
          OrderedJson j;
          j["id"] = r.id;
          if constexpr (std::is_same_v<T, Example>) {
            j["text"] = r.text;
            j["label"] = r.label;
          } else if constexpr (std::is_same_v<T, TokenExample>) {
            j["words"] = r.words;
            j["tags"] = r.tags;
          } else {
            j["text"] = r.text;
            j["score"] = r.score;
          }
          write_common(j, r.split);
          out << j.dump() << '\n';
        }
      },
      corpus.records());
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ostringstream ss;
  write_corpus(ss, corpus);
  write_file(path, ss.str());
}

Corpus downsample(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
  const std::size_t size = corpus.size();
  if (n > size) {
    throw InvalidArgument("cannot downsample " + std::to_string(size) +
                          " records to " + std::to_string(n));
  }
  std::vector<std::size_t> positions(size);
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  if (n < size) {
    // Partial Fisher-Yates: the first n slots become a uniform n-subset.
    Rng rng = make_rng(derive_seed(seed, "downsample"));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + uniform_index(rng, size - i);
      std::swap(positions[i], positions[j]);
    }
    positions.resize(n);
    std::sort(positions.begin(), positions.end());
  }
  return corpus.subset(positions);
}

double engagement_score(std::int64_t retweet_count) {
  if (retweet_count < 0) {
    throw InvalidArgument("retweet count must be non-negative, got " +
                          std::to_string(retweet_count));
  }
  return std::log10(static_cast<double>(retweet_count) + 1.0);
}

}  // namespace affeval
