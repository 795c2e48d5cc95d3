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

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "affeval/corpus.hpp"
#include "affeval/error.hpp"
#include "affeval/fixtures.hpp"

namespace affeval {
namespace {

TaskSpec sentiment() {
  return parse_task_specs(R"({"task_id":"sent","family":"binary-choice",
    "label_set":["positive","negative"],"prompt_id":"sentiment-analysis"})")[0];
}

TaskSpec aspects() {
  return parse_task_specs(R"({"task_id":"asp","family":"token-tagging",
    "prompt_id":"aspect-polarity"})")[0];
}

TaskSpec intensity() {
  return parse_task_specs(R"({"task_id":"int","family":"scalar-ranking",
    "prompt_id":"sentiment-ranking","score_range":[-1,1]})")[0];
}

Corpus parse(const std::string& text, const TaskSpec& spec) {
  std::istringstream in(text);
  return parse_corpus(in, spec);
}

TEST(TaskSpecs, CatalogLoadsAndValidates) {
  const auto specs = load_task_specs(std::string(AFFEVAL_SOURCE_DIR) + "/tasks/catalog.json");
  EXPECT_EQ(specs.size(), 34u);
  std::set<std::string> ids;
  for (const auto& s : specs) {
    EXPECT_NO_THROW(validate_task_structure(s)) << s.task_id;
    ids.insert(s.task_id);
  }
  EXPECT_EQ(ids.size(), specs.size());
  EXPECT_EQ(find_task(specs, "toxicity-threat").prompt_params.at("trait"), "threat");
  EXPECT_THROW(find_task(specs, "nope"), InvalidArgument);
}

TEST(TaskSpecs, RankingDefaultsToAB) {
  const auto s = intensity();
  EXPECT_EQ(s.label_set, (std::vector<std::string>{"A", "B"}));
  ASSERT_TRUE(s.score_range.lo && s.score_range.hi);
  EXPECT_EQ(*s.score_range.lo, -1.0);
}

TEST(TaskSpecs, StructuralViolationsRejected) {
  EXPECT_THROW(parse_task_specs(R"({"task_id":"x","family":"binary-choice",
      "label_set":["yes"],"prompt_id":"sarcasm-detection"})"),
               ValidationError);
  EXPECT_THROW(parse_task_specs(R"({"task_id":"x","family":"binary-choice",
      "label_set":["yes","Yes"],"prompt_id":"sarcasm-detection"})"),
               ValidationError);
  EXPECT_THROW(parse_task_specs(R"({"task_id":"x","family":"scalar-ranking",
      "label_set":["A","C"],"prompt_id":"sentiment-ranking"})"),
               ValidationError);
  EXPECT_THROW(parse_task_specs(R"({"task_id":"x","family":"sometimes"})"), ValidationError);
  EXPECT_THROW(parse_task_specs(R"({"task_id":"x","family":"binary-choice",
      "label_set":["yes","no"],"prompt_id":"sarcasm-detection","colour":1})"),
               ValidationError);
}

TEST(Labels, CanonicalForm) {
  EXPECT_EQ(canonical_label("  Positive "), "positive");
  EXPECT_EQ(canonical_label("\"NEGATIVE\""), "negative");
  EXPECT_EQ(canonical_label("'yes'"), "yes");
}

TEST(Corpus, SentenceRecordMapsFields) {
  const Corpus c = parse(R"({"id":"s1","text":"great phone","label":"positive"})", sentiment());
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.examples()[0], (Example{"s1", "great phone", "positive", Split::kTest}));
}

TEST(Corpus, LabelsCanonicalizedAtIngestion) {
  const Corpus c = parse(R"({"id":"s1","text":"t","label":" \"Negative\" "})", sentiment());
  EXPECT_EQ(c.examples()[0].label, "negative");
}

TEST(Corpus, LabelOutsideSetIsValidationError) {
  EXPECT_THROW(parse(R"({"id":"s1","text":"t","label":"ok"})", sentiment()), ValidationError);
}

TEST(Corpus, MalformedLineNamesLineAndField) {
  const std::string text =
      "{\"id\":\"a\",\"text\":\"t\",\"label\":\"positive\"}\n"
      "\n"
      "{\"id\":\"b\",\"text\":5,\"label\":\"positive\"}\n";
  try {
    parse(text, sentiment());
    FAIL() << "expected an ingestion error";
  } catch (const IngestionError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.field(), "text");
  }
  try {
    parse("{not json}\n", sentiment());
    FAIL();
  } catch (const IngestionError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(Corpus, UnknownFieldRejected) {
  EXPECT_THROW(parse(R"({"id":"s","text":"t","label":"positive","extra":1})", sentiment()),
               IngestionError);
}

TEST(Corpus, MissingFieldRejected) {
  EXPECT_THROW(parse(R"({"id":"s","label":"positive"})", sentiment()), IngestionError);
}

TEST(Corpus, TokenLengthMismatch) {
  EXPECT_THROW(parse(R"({"id":"t","words":["a","b","c","d","e"],"tags":["background","background","background","background"]})",
                     aspects()),
               ValidationError);
}

TEST(Corpus, TokenTagOutsideSet) {
  EXPECT_THROW(parse(R"({"id":"t","words":["a"],"tags":["opinion"]})", aspects()),
               ValidationError);
}

TEST(Corpus, ScoreOutsideRange) {
  EXPECT_THROW(parse(R"({"id":"x","text":"t","score":1.5})", intensity()), ValidationError);
  EXPECT_NO_THROW(parse(R"({"id":"x","text":"t","score":-1})", intensity()));
}

TEST(Corpus, SplitsAreDisjoint) {
  const std::string text =
      "{\"id\":\"a\",\"text\":\"t\",\"label\":\"positive\",\"split\":\"train\"}\n"
      "{\"id\":\"b\",\"text\":\"t\",\"label\":\"negative\",\"split\":\"dev\"}\n"
      "{\"id\":\"c\",\"text\":\"t\",\"label\":\"negative\"}\n";
  const Corpus c = parse(text, sentiment());
  const CorpusSplit s = c.split();
  EXPECT_EQ(s.train, std::vector<std::string>{"a"});
  EXPECT_EQ(s.dev, std::vector<std::string>{"b"});
  EXPECT_EQ(s.test, std::vector<std::string>{"c"});
  EXPECT_EQ(s.train_count() + s.dev_count() + s.test_count(), c.size());
  EXPECT_EQ(c.only(Split::kTest).size(), 1u);

  const std::string clash =
      "{\"id\":\"a\",\"text\":\"t\",\"label\":\"positive\",\"split\":\"train\"}\n"
      "{\"id\":\"a\",\"text\":\"t\",\"label\":\"positive\",\"split\":\"test\"}\n";
  EXPECT_THROW(parse(clash, sentiment()), ValidationError);
}

TEST(Corpus, RoundTripPreservesRecords) {
  for (const auto& spec : {sentiment(), aspects(), intensity()}) {
    const Corpus c = synth_corpus(spec, 60, 4);
    std::ostringstream out;
    write_corpus(out, c);
    const Corpus back = parse(out.str(), spec);
    EXPECT_EQ(back, c) << spec.task_id;
    std::ostringstream again;
    write_corpus(again, back);
    EXPECT_EQ(again.str(), out.str());
  }
}

TEST(Downsample, IdentityAtFullSize) {
  const Corpus c = synth_corpus(sentiment(), 50, 1);
  EXPECT_EQ(downsample(c, 50, 9), c);
}

TEST(Downsample, DeterministicOrderedSubset) {
  const Corpus c = synth_corpus(sentiment(), 1000, 1);
  const Corpus a = downsample(c, 100, 5);
  EXPECT_EQ(a, downsample(c, 100, 5));
  ASSERT_EQ(a.size(), 100u);
  // Retained ids keep corpus order.
  const auto all = c.ids();
  std::size_t cursor = 0;
  for (const auto& id : a.ids()) {
    while (cursor < all.size() && all[cursor] != id) ++cursor;
    ASSERT_LT(cursor, all.size()) << id;
  }
}

TEST(Downsample, Projection) {
  const Corpus c = synth_corpus(sentiment(), 300, 1);
  const Corpus once = downsample(c, 40, 2);
  EXPECT_EQ(downsample(once, 40, 2), once);
}

TEST(Downsample, OverlapMatchesHypergeometricMean) {
  // Two independent 100-of-1000 draws share 100 * 100 / 1000 = 10 ids on average.
  const Corpus c = synth_corpus(sentiment(), 1000, 1);
  double overlap = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto a = downsample(c, 100, 2 * s + 1).ids();
    const auto b = downsample(c, 100, 2 * s + 2).ids();
    ASSERT_NE(a, b);
    std::vector<std::string> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    overlap += static_cast<double>(both.size());
  }
  // Per-pair sd is about 2.85, so the mean of 100 has sd about 0.29.
  EXPECT_NEAR(overlap / 100.0, 10.0, 1.2);
}

TEST(Downsample, TooLargeIsError) {
  const Corpus c = synth_corpus(sentiment(), 10, 1);
  EXPECT_THROW(downsample(c, 11, 0), InvalidArgument);
}

TEST(Engagement, LogScore) {
  EXPECT_DOUBLE_EQ(engagement_score(0), 0.0);
  EXPECT_DOUBLE_EQ(engagement_score(9), 1.0);
  EXPECT_DOUBLE_EQ(engagement_score(99), 2.0);
  EXPECT_THROW(engagement_score(-1), InvalidArgument);
}

TEST(Fixtures, ChoiceCorpusIsBalanced) {
  const Corpus c = synth_corpus(sentiment(), 2001, 3);
  std::size_t pos = 0;
  for (const auto& e : c.examples()) pos += e.label == "positive";
  EXPECT_EQ(pos, 1001u);
}

TEST(Fixtures, ScalarScoresDistinctAndInRange) {
  const auto spec = intensity();
  const Corpus c = synth_corpus(spec, 500, 3);
  std::set<double> seen;
  for (const auto& e : c.scalar_examples()) {
    EXPECT_TRUE(spec.score_range.contains(e.score));
    seen.insert(e.score);
  }
  EXPECT_EQ(seen.size(), 500u);
}

}  // namespace
}  // namespace affeval
