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

// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// when any criterion fails. Everything runs offline against the oracle
// backend or a local stub server.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "affeval/backend.hpp"
#include "affeval/fixtures.hpp"
#include "affeval/harness.hpp"
#include "affeval/metrics.hpp"
#include "affeval/pairrank.hpp"
#include "affeval/parsing.hpp"
#include "affeval/prompting.hpp"
#include "affeval/random.hpp"
#include "support/chat_schema.hpp"
#include "support/oracles.hpp"
#include "support/stub_server.hpp"
#include "support/workspace.hpp"

namespace affeval {
namespace {

using Clock = std::chrono::steady_clock;
using namespace std::chrono_literals;
using testing::ScratchDir;
using testing::slurp;
using testing::task;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

RunManifest oracle_run(const TaskSpec& spec, const Corpus& corpus,
                       const std::filesystem::path& dir, double error, double corruption,
                       std::uint64_t seed) {
  OracleBackend backend(OracleConfig{error, corruption, seed});
  RunOptions opts;
  opts.out_dir = dir;
  opts.seeds = Seeds::from(seed);
  opts.batch.parallelism = 4;
  return run_task(spec, corpus, backend, opts);
}

// One representative task per family.
const std::vector<std::string>& family_tasks() {
  static const std::vector<std::string> ids = {"sentiment-analysis", "aspect-polarity-res14",
                                               "opinion-extraction-res14", "sentiment-ranking"};
  return ids;
}

Outcome pair_sampling() {
  Outcome o;
  const auto start = Clock::now();
  std::size_t sets = 0;
  for (std::size_t n : {10, 100, 1000}) {
    const std::size_t target = std::min(4 * n, n * (n - 1) / 2);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const PairSet s = sample_pairs(n, 4, seed);
      ++sets;
      std::set<std::pair<std::size_t, std::size_t>> seen;
      for (const auto& [u, v] : s.edges) {
        if (u == v) o.fail("self-pair at N=" + std::to_string(n));
        if (u >= n || v >= n) o.fail("index out of range");
        if (!seen.insert({std::min(u, v), std::max(u, v)}).second) {
          o.fail("duplicate pair at N=" + std::to_string(n));
        }
      }
      if (s.edges.size() != target) {
        o.fail("N=" + std::to_string(n) + " has " + std::to_string(s.edges.size()) +
               " edges, want " + std::to_string(target));
      }
      if (!is_connected(n, s.edges)) o.fail("disconnected at N=" + std::to_string(n));
    }
  }
  const double secs = seconds_since(start);
  if (secs >= 10.0) o.fail(fmt("took %.2f s", secs));
  if (o.pass) o.detail = std::to_string(sets) + " pair sets valid in " + fmt("%.2f s", secs);
  return o;
}

Outcome gold_soundness() {
  Outcome o;
  const Corpus corpus = synth_corpus(task("sentiment-ranking"), 1000, 17);
  const auto& items = corpus.scalar_examples();
  std::unordered_map<std::string, double> score;
  for (const auto& ex : items) score[ex.id] = ex.score;
  if (score.size() != 1000) o.fail("fixture scores not distinct per id");
  const PairBuild build = make_pairs(corpus, 4, Seeds::from(17));
  std::size_t ok = 0;
  for (const auto& p : build.instances) {
    const std::string want = score.at(p.left_id) > score.at(p.right_id) ? "A" : "B";
    ok += p.gold == want;
  }
  if (ok != build.instances.size() || build.instances.size() != 4000) {
    o.fail(std::to_string(ok) + "/" + std::to_string(build.instances.size()) +
           " golds match");
  }
  if (o.pass) o.detail = "4000/4000 pair golds match recomputation";
  return o;
}

std::string tsv_value(const std::filesystem::path& dir, const std::string& key) {
  std::istringstream in(slurp(dir / "results.tsv"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + "\t", 0) == 0) return line.substr(key.size() + 1);
  }
  return "";
}

Outcome oracle_end_to_end() {
  Outcome o;
  const auto start = Clock::now();
  const auto& spec = task("sentiment-analysis");
  const Corpus corpus = synth_corpus(spec, 2000, 23);
  ScratchDir clean("acc3-clean"), noisy("acc3-noisy");
  oracle_run(spec, corpus, clean.path(), 0.10, 0.0, 23);
  const double acc = std::stod(tsv_value(clean.path(), "accuracy"));
  const double uar = std::stod(tsv_value(clean.path(), "uar"));
  if (std::fabs(acc - 0.90) > 0.02) o.fail(fmt("accuracy %.4f outside 0.90 +- 0.02", acc));
  if (std::fabs(uar - 0.90) > 0.02) o.fail(fmt("UAR %.4f outside 0.90 +- 0.02", uar));
  const auto m = oracle_run(spec, corpus, noisy.path(), 0.10, 0.05, 23);
  const double ratio = static_cast<double>(m.counts.excluded) / m.counts.total;
  if (std::fabs(ratio - 0.05) > 0.015) o.fail(fmt("exclusion %.4f outside 0.05 +- 0.015", ratio));
  const double secs = seconds_since(start);
  if (secs >= 60.0) o.fail(fmt("took %.2f s", secs));
  if (o.pass) {
    o.detail = fmt("accuracy %.4f, UAR %.4f, ", acc, uar) +
               fmt("exclusion %.4f in %.2f s", ratio, secs);
  }
  return o;
}

Outcome metric_oracles() {
  Outcome o;
  Rng rng = make_rng(4);
  std::size_t checked = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t k = 1 + uniform_index(rng, 6);
    std::vector<std::string> classes;
    for (std::size_t c = 0; c < k; ++c) classes.push_back("c" + std::to_string(c));
    const std::size_t n = 1 + uniform_index(rng, 30);
    const std::size_t parts = 1 + uniform_index(rng, 3);
    std::vector<ConfusionMatrix> pieces(parts, ConfusionMatrix(classes));
    testing::BruteMetrics brute;
    std::vector<std::string> gold, pred;
    for (std::size_t i = 0; i < n; ++i) {
      gold.push_back(classes[uniform_index(rng, k)]);
      pred.push_back(classes[uniform_index(rng, k)]);
      brute.add(gold.back(), pred.back());
      pieces[uniform_index(rng, parts)].add(gold.back(), pred.back());
    }
    const ConfusionMatrix cm = confusion(gold, pred, classes);
    const ConfusionMatrix pooled = micro_pool(pieces);
    for (const ConfusionMatrix* m : {&cm, &pooled}) {
      if (accuracy(*m) != brute.accuracy()) o.fail("accuracy differs at instance " +
                                                  std::to_string(inst));
      if (supported_uar(*m) != brute.uar(classes)) {
        o.fail("UAR differs at instance " + std::to_string(inst));
      }
      if (m->unsupported_classes().empty() && uar(*m) != brute.uar(classes)) {
        o.fail("strict UAR differs at instance " + std::to_string(inst));
      }
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t p = 0; p < k; ++p) {
          std::size_t want = 0;
          for (std::size_t i = 0; i < n; ++i) want += gold[i] == classes[c] && pred[i] == classes[p];
          if (m->count(c, p) != want) o.fail("cell count differs");
        }
      }
    }
    ++checked;
  }
  if (o.pass) o.detail = std::to_string(checked) + " instances match exactly, pooled and direct";
  return o;
}

Outcome permutation() {
  Outcome o;
  Rng rng = make_rng(5);
  double worst = 0.0;
  for (int c = 0; c < 50; ++c) {
    const std::size_t n = 4 + uniform_index(rng, 7);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Half the cases use 0/1 outcomes, which produce heavy ties.
      if (c % 2 == 0) {
        a[i] = bernoulli(rng, 0.7) ? 1.0 : 0.0;
        b[i] = bernoulli(rng, 0.4) ? 1.0 : 0.0;
      } else {
        a[i] = uniform01(rng) + 0.3;
        b[i] = uniform01(rng);
      }
    }
    const auto r = permutation_test(a, b, 100000, 1000 + c);
    const double exact = testing::exact_sign_flip_p(a, b);
    worst = std::max(worst, std::fabs(r.p_value - exact));
  }
  if (worst > 0.02) o.fail(fmt("max |p - exact| = %.4f", worst));
  std::vector<double> same = {0.1, 0.9, 0.5, 0.5, 0.3};
  const auto id = permutation_test(same, same, 100000, 1);
  if (id.p_value != 1.0) o.fail(fmt("identical vectors gave p = %.6f", id.p_value));
  const std::vector<std::pair<double, std::string>> stars = {
      {0.001, "**"}, {0.0099, "**"}, {0.01, "*"}, {0.03, "*"},
      {0.0499, "*"}, {0.05, ""},     {0.2, ""},   {1.0, ""}};
  for (const auto& [p, s] : stars) {
    if (significance_stars(p) != s) o.fail(fmt("stars wrong at p = %.4f", p));
  }
  if (o.pass) o.detail = fmt("max |p - exact| = %.4f over 50 cases; identical p = 1", worst);
  return o;
}

Outcome parser_round_trip() {
  Outcome o;
  std::string summary;
  for (const auto& id : family_tasks()) {
    const auto& spec = task(id);
    // Ranking issues four pairs per item.
    const std::size_t n = spec.family == TaskFamily::kScalarRanking ? 125 : 500;
    const Corpus corpus = synth_corpus(spec, n, 31);
    ScratchDir clean("acc6-clean"), corrupt("acc6-corrupt");
    oracle_run(spec, corpus, clean.path(), 0.0, 0.0, 31);
    const auto items = load_predictions(clean.path());
    std::size_t exact = 0;
    for (const auto& it : items) exact += !it.excluded && it.gold == it.predicted;
    if (items.size() != 500 || exact != 500) {
      o.fail(id + ": " + std::to_string(exact) + "/" + std::to_string(items.size()) +
             " reproduced");
    }
    const auto m = oracle_run(spec, corpus, corrupt.path(), 0.3, 1.0, 32);
    if (m.counts.excluded != m.counts.total) {
      o.fail(id + ": " + std::to_string(m.counts.total - m.counts.excluded) +
             " corrupted replies scored");
    }
    summary += (summary.empty() ? "" : ", ") + std::string(to_string(spec.family));
  }
  if (o.pass) o.detail = "500/500 reproduced and all corrupted excluded for " + summary;
  return o;
}

struct Canonical {
  TaskFamily family;
  std::vector<std::string> labels;
  std::map<std::string, std::string> params;
};

Outcome prompt_fidelity() {
  Outcome o;
  const std::map<std::string, Canonical> canonical = {
      {"aspect-polarity", {TaskFamily::kTokenTagging, aspect_tags(), {}}},
      {"opinion-extraction", {TaskFamily::kExpressionExtraction, opinion_tags(), {}}},
      {"sentiment-analysis", {TaskFamily::kBinaryChoice, {"positive", "negative"}, {}}},
      {"sentiment-ranking", {TaskFamily::kScalarRanking, {"A", "B"}, {}}},
      {"emotion-ranking", {TaskFamily::kScalarRanking, {"A", "B"}, {{"emotion", "joy"}}}},
      {"suicide-detection", {TaskFamily::kBinaryChoice, {"yes", "no"}, {}}},
      {"toxicity-detection", {TaskFamily::kBinaryChoice, {"yes", "no"}, {{"trait", "threat"}}}},
      {"wellbeing-assessment", {TaskFamily::kBinaryChoice, {"yes", "no"}, {}}},
      {"engagement-ranking", {TaskFamily::kScalarRanking, {"A", "B"}, {}}},
      {"personality-ranking", {TaskFamily::kScalarRanking, {"A", "B"}, {{"trait", "openness"}}}},
      {"sarcasm-detection", {TaskFamily::kBinaryChoice, {"yes", "no"}, {}}},
      {"subjectivity-detection", {TaskFamily::kBinaryChoice, {"subjective", "objective"}, {}}},
  };
  const auto registered = PromptRegistry::builtin().ids();
  if (registered.size() != canonical.size()) o.fail("registry size differs from goldens");
  std::size_t matched = 0;
  for (const auto& id : registered) {
    const auto it = canonical.find(id);
    if (it == canonical.end()) {
      o.fail("no golden for template " + id);
      continue;
    }
    TaskSpec s;
    s.task_id = "golden-" + id;
    s.family = it->second.family;
    s.label_set = it->second.labels;
    s.prompt_id = id;
    s.prompt_params = it->second.params;
    const std::filesystem::path golden =
        std::filesystem::path(AFFEVAL_GOLDEN_DIR) / "prompts" / (id + ".txt");
    if (!std::filesystem::exists(golden)) {
      o.fail("missing golden " + golden.string());
      continue;
    }
    if (render_system_prompt(s) != slurp(golden)) {
      o.fail("template " + id + " differs from golden");
      continue;
    }
    ++matched;
  }
  // Every catalog task must render and bind cleanly.
  for (const auto& spec : testing::catalog()) {
    PromptRegistry::builtin().validate_binding(spec);
    const std::string text = render_system_prompt(spec);
    const bool suffix = spec.family == TaskFamily::kBinaryChoice ||
                        spec.family == TaskFamily::kScalarRanking;
    const bool has = text.find("You are only allowed to answer") != std::string::npos;
    if (suffix != has) o.fail("suffix placement wrong for " + spec.task_id);
  }
  if (o.pass) {
    o.detail = std::to_string(matched) + " templates byte-match; " +
               std::to_string(testing::catalog().size()) + " catalog tasks render";
  }
  return o;
}

Outcome scalar_prediction() {
  Outcome o;
  Rng rng = make_rng(8);
  std::vector<double> anchors = {0.0, 1.0};
  for (int i = 0; i < 40; ++i) anchors.push_back(uniform01(rng));
  std::sort(anchors.begin(), anchors.end());
  const double eps = 0.01;
  const std::size_t bound = static_cast<std::size_t>(std::ceil(std::log2(1.0 / eps))) + 1;
  std::size_t worst = 0;
  double worst_err = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double target = uniform01(rng);
    const auto r = predict_scalar([&](double v) { return target > v; }, anchors, eps);
    worst = std::max(worst, r.comparisons);
    worst_err = std::max(worst_err, std::fabs(r.value - target));
    if (std::fabs(r.value - target) > eps) o.fail(fmt("target %.4f predicted %.4f", target, r.value));
    if (r.comparisons > bound) o.fail("used " + std::to_string(r.comparisons) + " comparisons");
  }
  if (o.pass) {
    o.detail = fmt("max error %.4f, ", worst_err) + "max comparisons " +
               std::to_string(worst) + " <= " + std::to_string(bound);
  }
  return o;
}

Outcome wire_conformance() {
  Outcome o;
  std::size_t bodies = 0;
  for (const auto& id : family_tasks()) {
    const auto& spec = task(id);
    testing::StubServer server({}, testing::ok_reply("positive"));
    BackendConfig cfg;
    cfg.endpoint_url = server.url();
    cfg.auth_token_env = "AFFEVAL_ACCEPTANCE_UNSET";
    cfg.timeout = 5000ms;
    HttpChatBackend backend(cfg);
    ScratchDir dir("acc9");
    RunOptions opts;
    opts.out_dir = dir.path();
    opts.seeds = Seeds::from(1);
    opts.batch.parallelism = 2;
    run_task(spec, synth_corpus(spec, 6, 1), backend, opts);
    for (const auto& req : server.requests()) {
      ++bodies;
      if (req.path != "/v1/chat/completions") o.fail("request path " + req.path);
      Json body;
      try {
        body = Json::parse(req.body);
      } catch (const std::exception&) {
        o.fail(id + ": body is not JSON");
        continue;
      }
      const auto v = testing::chat_request_violations(body);
      if (!v.empty()) o.fail(id + ": " + v.front());
    }
  }

  // Scripted failure sequences against the declared policy.
  BackendConfig cfg;
  cfg.max_retries = 3;
  cfg.initial_backoff = 250ms;
  cfg.backoff_multiplier = 2.0;
  cfg.max_backoff = 1500ms;
  cfg.timeout = 5000ms;
  const RetryPolicy policy(cfg);
  struct Script {
    std::string name;
    std::vector<testing::StubReply> replies;
    std::size_t attempts;
    ExchangeFailure failure;
  };
  const std::vector<Script> scripts = {
      {"503,500,ok", {{503, "x"}, {500, "x"}, testing::ok_reply("yes")}, 3, ExchangeFailure::kNone},
      {"429x4", {{429, "x"}, {429, "x"}, {429, "x"}, {429, "x"}}, 4, ExchangeFailure::kTransport},
      {"502x4", {{502, "x"}, {502, "x"}, {502, "x"}, {502, "x"}}, 4, ExchangeFailure::kTransport},
      {"400", {{400, "x"}}, 1, ExchangeFailure::kTransport},
      {"bad envelope", {{200, R"({"choices":[]})"}}, 1, ExchangeFailure::kProtocol},
      {"429,ok", {{429, "x"}, testing::ok_reply("no")}, 2, ExchangeFailure::kNone},
  };
  for (const auto& s : scripts) {
    testing::StubServer server(s.replies, {599, "script exhausted"});
    cfg.endpoint_url = server.url();
    std::vector<std::chrono::milliseconds> slept;
    HttpChatBackend backend(cfg, [&](std::chrono::milliseconds d) { slept.push_back(d); });
    const auto ex = backend.complete(MessagePair{"system", "user"});
    if (ex.attempt_count != s.attempts) {
      o.fail(s.name + ": " + std::to_string(ex.attempt_count) + " attempts, want " +
             std::to_string(s.attempts));
    }
    if (ex.failure != s.failure) o.fail(s.name + ": wrong failure kind");
    if (server.requests().size() != s.attempts) o.fail(s.name + ": wrong request count");
    if (slept.size() + 1 != s.attempts) o.fail(s.name + ": wrong number of waits");
    for (std::size_t k = 0; k < slept.size(); ++k) {
      if (slept[k] != policy.delay(k)) o.fail(s.name + ": delay " + std::to_string(k) + " off");
    }
  }
  if (o.pass) {
    o.detail = std::to_string(bodies) + " bodies conform; " + std::to_string(scripts.size()) +
               " failure scripts follow the backoff schedule";
  }
  return o;
}

Outcome replay_determinism() {
  Outcome o;
  for (const auto& id : family_tasks()) {
    const auto& spec = task(id);
    const Corpus corpus = synth_corpus(spec, 150, 41);
    ScratchDir a("acc10-a"), b("acc10-b");
    oracle_run(spec, corpus, a.path(), 0.2, 0.1, 41);
    oracle_run(spec, corpus, b.path(), 0.2, 0.1, 41);
    const std::string results = slurp(a / "results.tsv");
    const std::string preds = slurp(a / "predictions.jsonl");
    std::filesystem::remove(a / "results.tsv");
    std::filesystem::remove(a / "predictions.jsonl");
    score_run(spec, corpus, a.path());
    if (slurp(a / "results.tsv") != results) o.fail(id + ": re-scored results differ");
    if (slurp(a / "predictions.jsonl") != preds) o.fail(id + ": re-scored predictions differ");
    if (slurp(b / "results.tsv") != results) o.fail(id + ": same-seed runs score differently");
    auto ma = load_manifest(a.path()).to_json();
    auto mb = load_manifest(b.path()).to_json();
    ma.erase("created_at");
    mb.erase("created_at");
    if (ma != mb) o.fail(id + ": same-seed manifests differ");
  }
  if (o.pass) o.detail = "re-scoring byte-identical and same-seed runs agree for 4 families";
  return o;
}

}  // namespace
}  // namespace affeval

int main() {
  using namespace affeval;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"pair sampling invariants", pair_sampling},
      {"pair gold soundness", gold_soundness},
      {"oracle end-to-end rates", oracle_end_to_end},
      {"metric oracles", metric_oracles},
      {"permutation test", permutation},
      {"parser round-trip", parser_round_trip},
      {"prompt fidelity", prompt_fidelity},
      {"predict_scalar", scalar_prediction},
      {"wire conformance", wire_conformance},
      {"replay determinism", replay_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %zu: %s (%s) [%.2f s]\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
