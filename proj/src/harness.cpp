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

#include "affeval/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "affeval/error.hpp"
#include "affeval/prompting.hpp"
#include "affeval/random.hpp"

namespace affeval {

namespace {

constexpr const char* kTranscript = "transcript.jsonl";
constexpr const char* kPairs = "pairs.jsonl";
constexpr const char* kPredictions = "predictions.jsonl";
constexpr const char* kParseReport = "parse_report.json";
constexpr const char* kResults = "results.tsv";
constexpr const char* kManifest = "manifest.json";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string display_label(const TaskSpec& spec, const std::string& canonical) {
  for (const auto& l : spec.label_set) {
    if (canonical_label(l) == canonical) return l;
  }
  throw ValidationError("label '" + canonical + "' is not in the label set of '" +
                        spec.task_id + "'");
}

std::string corpus_fingerprint(const Corpus& corpus) {
  std::ostringstream ss;
  write_corpus(ss, corpus);
  return hex64(fnv1a64(ss.str()));
}

const std::vector<ExclusionReason>& all_reasons() {
  static const std::vector<ExclusionReason> r = {
      ExclusionReason::kAmbiguous, ExclusionReason::kNoLabel,
      ExclusionReason::kMalformedBullet, ExclusionReason::kTransport,
      ExclusionReason::kProtocol};
  return r;
}

OrderedJson seeds_json(const Seeds& s) {
  OrderedJson j;
  j["sampling"] = s.sampling;
  j["presentation"] = s.presentation;
  j["permutation"] = s.permutation;
  return j;
}

ConfusionMatrix matrix_of(std::span<const ScoredItem> items,
                          const std::vector<std::string>& classes) {
  ConfusionMatrix cm(classes);
  for (const auto& item : items) {
    if (item.excluded) {
      ++cm.excluded;
      continue;
    }
    for (std::size_t t = 0; t < item.gold.size(); ++t) cm.add(item.gold[t], item.predicted[t]);
  }
  return cm;
}

}  // namespace

Seeds Seeds::from(std::uint64_t seed) {
  return {derive_seed(seed, "sampling"), derive_seed(seed, "presentation"),
          derive_seed(seed, "permutation")};
}

std::string format_fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

OrderedJson RunManifest::to_json() const {
  OrderedJson j;
  j["run_id"] = run_id;
  j["task_id"] = task_id;
  j["group"] = group;
  j["sub_label"] = sub_label;
  j["system"] = system;
  j["backend"] = backend;
  j["seeds"] = seeds_json(seeds);
  j["counts"] = OrderedJson{{"total", counts.total},
                            {"scored", counts.scored},
                            {"excluded", counts.excluded}};
  j["corpus_fingerprint"] = corpus_fingerprint;
  j["pairs"] = pairs;
  OrderedJson a = OrderedJson::object();
  for (const auto& [k, v] : artifacts) a[k] = v;
  j["artifacts"] = a;
  j["config"] = config;
  j["created_at"] = created_at;
  return j;
}

RunManifest RunManifest::from_json(const OrderedJson& j) {
  try {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.task_id = j.at("task_id").get<std::string>();
    m.group = j.value("group", "");
    m.sub_label = j.value("sub_label", "");
    m.system = j.at("system").get<std::string>();
    m.backend = j.at("backend");
    const auto& s = j.at("seeds");
    m.seeds = {s.at("sampling").get<std::uint64_t>(),
               s.at("presentation").get<std::uint64_t>(),
               s.at("permutation").get<std::uint64_t>()};
    const auto& c = j.at("counts");
    m.counts = {c.at("total").get<std::size_t>(), c.at("scored").get<std::size_t>(),
                c.at("excluded").get<std::size_t>()};
    m.corpus_fingerprint = j.at("corpus_fingerprint").get<std::string>();
    m.pairs = j.contains("pairs") ? j.at("pairs") : OrderedJson();
    for (const auto& [k, v] : j.at("artifacts").items()) m.artifacts[k] = v.get<std::string>();
    m.config = j.contains("config") ? j.at("config") : OrderedJson::object();
    m.created_at = j.value("created_at", "");
    return m;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
}

RunManifest load_manifest(const std::filesystem::path& run_dir) {
  const auto path = run_dir / kManifest;
  OrderedJson j;
  try {
    j = OrderedJson::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return RunManifest::from_json(j);
}

std::vector<std::string> scoring_classes(const TaskSpec& spec) {
  return spec.canonical_labels();
}

ScoreSummary score_records(const TaskSpec& spec, const Corpus& corpus,
                           std::span<const PairInstance> pairs,
                           std::span<const TranscriptRecord> records) {
  const auto classes = scoring_classes(spec);
  ScoreSummary out;
  for (auto r : all_reasons()) out.reasons[r] = 0;

  std::unordered_map<std::string, std::size_t> index;
  if (spec.family == TaskFamily::kScalarRanking) {
    for (std::size_t i = 0; i < pairs.size(); ++i) index[pairs[i].id()] = i;
  } else {
    const auto ids = corpus.ids();
    for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
  }

  std::set<std::string> seen;
  for (const auto& rec : records) {
    if (rec.task_id != spec.task_id) {
      throw ValidationError("transcript record for task '" + rec.task_id +
                            "' while scoring '" + spec.task_id + "'");
    }
    const auto it = index.find(rec.example_id);
    if (it == index.end()) {
      throw ValidationError("transcript example '" + rec.example_id + "' has no gold");
    }
    if (!seen.insert(rec.example_id).second) {
      throw ValidationError("transcript repeats example '" + rec.example_id + "'");
    }

    ScoredItem item;
    item.example_id = rec.example_id;
    const std::vector<std::string>* words = nullptr;
    switch (spec.family) {
      case TaskFamily::kBinaryChoice:
        item.gold = {corpus.examples()[it->second].label};
        break;
      case TaskFamily::kScalarRanking:
        item.gold = {canonical_label(pairs[it->second].gold)};
        break;
      case TaskFamily::kTokenTagging:
      case TaskFamily::kExpressionExtraction: {
        const auto& ex = corpus.token_examples()[it->second];
        words = &ex.words;
        for (const auto& t : ex.tags) item.gold.push_back(project_tag(t, classes));
        break;
      }
    }

    ParsedPrediction parsed = Excluded{ExclusionReason::kTransport};
    if (rec.failure == ExchangeFailure::kProtocol) {
      parsed = Excluded{ExclusionReason::kProtocol};
    } else if (rec.reply) {
      parsed = parse_reply(spec, *rec.reply);
    }

    if (const auto* ex = std::get_if<Excluded>(&parsed)) {
      item.excluded = true;
      item.reason = ex->reason;
      ++out.reasons[ex->reason];
    } else if (const auto* choice = std::get_if<Choice>(&parsed)) {
      item.predicted = {choice->label};
    } else {
      const TokenPrediction tp = align_to_tokens(parsed, *words);
      for (const auto& t : tp.tags) item.predicted.push_back(project_tag(t, classes));
      item.unmatched = tp.unmatched;
      out.unmatched += tp.unmatched;
    }
    out.items.push_back(std::move(item));
  }

  out.matrix = matrix_of(out.items, classes);
  out.counts.total = out.items.size();
  out.counts.excluded = out.matrix.excluded;
  out.counts.scored = out.counts.total - out.counts.excluded;
  return out;
}

std::string format_results(const TaskSpec& spec, const ScoreSummary& s) {
  std::string out = "metric\tvalue\n";
  const auto row = [&](const std::string& k, const std::string& v) {
    out += k + "\t" + v + "\n";
  };
  row("task_id", spec.task_id);
  row("total", std::to_string(s.counts.total));
  row("scored", std::to_string(s.counts.scored));
  row("excluded", std::to_string(s.counts.excluded));
  row("exclusion_ratio",
      s.counts.total == 0 ? "-"
                          : format_fixed(static_cast<double>(s.counts.excluded) /
                                         static_cast<double>(s.counts.total)));
  row("units", std::to_string(s.matrix.total()));
  const bool any = s.matrix.total() > 0;
  row("accuracy", any ? format_fixed(accuracy(s.matrix)) : "-");
  row("uar", any ? format_fixed(supported_uar(s.matrix)) : "-");
  const auto unsupported = s.matrix.unsupported_classes();
  std::string joined;
  for (const auto& c : unsupported) joined += (joined.empty() ? "" : ",") + c;
  row("unsupported_classes", joined.empty() ? "-" : joined);
  for (std::size_t c = 0; c < s.matrix.size(); ++c) {
    row("recall:" + s.matrix.classes()[c],
        s.matrix.gold_count(c) == 0 ? "-" : format_fixed(recall(s.matrix, c)));
  }
  row("unmatched_expressions", std::to_string(s.unmatched));
  return out;
}

namespace {

std::string predictions_jsonl(const ScoreSummary& s) {
  std::string out;
  for (const auto& item : s.items) {
    OrderedJson j;
    j["example_id"] = item.example_id;
    j["status"] = item.excluded ? "excluded" : "scored";
    if (item.excluded) j["reason"] = std::string(to_string(item.reason));
    j["gold"] = item.gold;
    j["predicted"] = item.predicted;
    j["unmatched"] = item.unmatched;
    out += j.dump() + "\n";
  }
  return out;
}

std::string parse_report_json(const TaskSpec& spec, const ScoreSummary& s) {
  OrderedJson j;
  j["task_id"] = spec.task_id;
  j["total"] = s.counts.total;
  j["scored"] = s.counts.scored;
  j["excluded"] = s.counts.excluded;
  OrderedJson reasons = OrderedJson::object();
  for (auto r : all_reasons()) reasons[std::string(to_string(r))] = s.reasons.at(r);
  j["reasons"] = reasons;
  j["unmatched_expressions"] = s.unmatched;
  return j.dump(2) + "\n";
}

}  // namespace

ScoreSummary score_run(const TaskSpec& spec, const Corpus& corpus,
                       const std::filesystem::path& run_dir) {
  const auto records = load_transcript(run_dir / kTranscript);
  std::vector<PairInstance> pairs;
  if (spec.family == TaskFamily::kScalarRanking) pairs = load_pair_instances(run_dir / kPairs);
  ScoreSummary s = score_records(spec, corpus, pairs, records);
  write_file(run_dir / kPredictions, predictions_jsonl(s));
  write_file(run_dir / kParseReport, parse_report_json(spec, s));
  write_file(run_dir / kResults, format_results(spec, s));
  return s;
}

PairBuild make_pairs(const Corpus& corpus, std::size_t multiplier, const Seeds& seeds) {
  const Corpus test = corpus.only(Split::kTest);
  const auto& examples = test.scalar_examples();
  const PairSet set = sample_pairs(examples.size(), multiplier, seeds.sampling);
  return build_pair_instances(examples, set, seeds.presentation);
}

RunManifest run_task(const TaskSpec& spec, const Corpus& corpus, ChatBackend& backend,
                     const RunOptions& options) {
  validate_task_structure(spec);
  const PromptRegistry& registry = PromptRegistry::builtin();
  registry.validate_binding(spec);
  if (options.out_dir.empty()) throw InvalidArgument("run needs an output directory");

  Corpus test = corpus.only(Split::kTest);
  if (options.downsample && *options.downsample < test.size()) {
    test = downsample(test, *options.downsample, options.seeds.sampling);
  }
  if (test.size() == 0) throw ValidationError("no test examples for '" + spec.task_id + "'");
  std::filesystem::create_directories(options.out_dir);

  const std::string system_prompt = registry.render_system_prompt(spec);
  std::vector<Query> queries;
  OrderedJson pair_info = nullptr;

  switch (spec.family) {
    case TaskFamily::kBinaryChoice:
      for (const auto& ex : test.examples()) {
        GoldAnswer gold{spec.family, display_label(spec, ex.label), spec.label_set, {}, {}};
        queries.push_back({ex.id, {system_prompt, ex.text}, gold});
      }
      break;
    case TaskFamily::kTokenTagging:
    case TaskFamily::kExpressionExtraction:
      for (const auto& ex : test.token_examples()) {
        GoldAnswer gold{spec.family, {}, spec.label_set, ex.words, ex.tags};
        queries.push_back({ex.id, {system_prompt, ex.text()}, gold});
      }
      break;
    case TaskFamily::kScalarRanking: {
      if (test.size() < 2) throw ValidationError("pair ranking needs at least two items");
      const PairBuild build = make_pairs(test, options.pairs_multiplier, options.seeds);
      write_pair_instances(options.out_dir / kPairs, build.instances);
      std::unordered_map<std::string, const ScalarExample*> by_id;
      for (const auto& ex : test.scalar_examples()) by_id[ex.id] = &ex;
      for (const auto& p : build.instances) {
        GoldAnswer gold{spec.family, p.gold, spec.label_set, {}, {}};
        queries.push_back({p.id(),
                           {system_prompt, render_pair_user_message(by_id.at(p.left_id)->text,
                                                                    by_id.at(p.right_id)->text)},
                           gold});
      }
      pair_info = OrderedJson{{"multiplier", options.pairs_multiplier},
                              {"edges", expected_edge_count(test.size(),
                                                            options.pairs_multiplier)},
                              {"instances", build.instances.size()},
                              {"ties_discarded", build.ties_discarded},
                              {"resampled", build.resampled},
                              {"short_of_target", build.short_of_target}};
      break;
    }
  }

  const auto exchanges = run_batch(backend, queries, options.batch);

  const auto transcript_path = options.out_dir / kTranscript;
  std::filesystem::remove(transcript_path);
  {
    TranscriptLog log(transcript_path);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      log.append(make_transcript_record(spec.task_id, queries[i].example_id, exchanges[i]));
    }
  }

  const ScoreSummary summary = score_run(spec, test, options.out_dir);

  RunManifest m;
  m.task_id = spec.task_id;
  m.group = spec.group.empty() ? spec.task_id : spec.group;
  m.sub_label = spec.sub_label;
  m.system = backend.system_name();
  m.backend = backend.describe();
  m.seeds = options.seeds;
  m.counts = summary.counts;
  m.corpus_fingerprint = corpus_fingerprint(test);
  m.pairs = pair_info;
  m.artifacts = {{"transcript", kTranscript},
                 {"predictions", kPredictions},
                 {"parse_report", kParseReport},
                 {"results", kResults}};
  if (spec.family == TaskFamily::kScalarRanking) m.artifacts["pairs"] = kPairs;
  m.config = options.config;
  const std::string identity = spec.task_id + "\n" + m.system + "\n" + m.backend.dump() +
                               "\n" + seeds_json(m.seeds).dump() + "\n" +
                               m.corpus_fingerprint + "\n" + m.pairs.dump();
  m.run_id = hex64(fnv1a64(identity));
  m.created_at = utc_now();
  write_file(options.out_dir / kManifest, m.to_json().dump(2) + "\n");
  return m;
}

MetricVectors metric_vectors(std::span<const ScoredItem> items,
                             const std::vector<std::string>& classes) {
  std::unordered_map<std::string, std::size_t> support;
  std::size_t units = 0;
  for (const auto& item : items) {
    if (item.excluded) throw InvalidArgument("metric vectors take scored items only");
    for (const auto& g : item.gold) ++support[g];
    units += item.gold.size();
  }
  if (units == 0) throw InvalidArgument("no scored units");
  std::size_t supported = 0;
  for (const auto& c : classes) supported += support.contains(c) ? 1 : 0;

  MetricVectors v;
  const double n = static_cast<double>(items.size());
  for (const auto& item : items) {
    double correct = 0.0;
    double recall_share = 0.0;
    for (std::size_t t = 0; t < item.gold.size(); ++t) {
      if (item.gold[t] != item.predicted[t]) continue;
      correct += 1.0;
      recall_share += 1.0 / static_cast<double>(support.at(item.gold[t]));
    }
    v.keys.push_back(item.example_id);
    v.accuracy.push_back(n * correct / static_cast<double>(units));
    v.uar.push_back(n * recall_share / static_cast<double>(supported));
  }
  return v;
}

std::vector<ScoredItem> load_predictions(const std::filesystem::path& run_dir) {
  std::vector<ScoredItem> out;
  for_each_record(run_dir / kPredictions, [&](std::size_t line, const Json& j) {
    RecordReader r(j, line);
    ScoredItem item;
    item.example_id = r.string("example_id");
    const std::string status = r.string("status");
    if (status == "excluded") {
      item.excluded = true;
      item.reason = parse_exclusion_reason(r.string("reason"));
    } else if (status != "scored") {
      throw IngestionError(line, "status", "expected scored or excluded");
    }
    item.gold = r.string_list("gold");
    item.predicted = r.string_list("predicted");
    item.unmatched = static_cast<std::size_t>(r.integer("unmatched"));
    r.finish();
    if (!item.excluded && item.gold.size() != item.predicted.size()) {
      throw IngestionError(line, "predicted", "length differs from gold");
    }
    out.push_back(std::move(item));
  });
  return out;
}

namespace {

struct PairedItems {
  std::vector<ScoredItem> a;
  std::vector<ScoredItem> b;
};

PairedItems intersect(const std::vector<ScoredItem>& a, const std::vector<ScoredItem>& b) {
  std::unordered_map<std::string, const ScoredItem*> in_b;
  for (const auto& item : b) {
    if (!item.excluded) in_b[item.example_id] = &item;
  }
  PairedItems out;
  for (const auto& item : a) {
    if (item.excluded) continue;
    const auto it = in_b.find(item.example_id);
    if (it == in_b.end()) continue;
    if (it->second->gold != item.gold) {
      throw ValidationError("runs disagree on the gold of '" + item.example_id + "'");
    }
    out.a.push_back(item);
    out.b.push_back(*it->second);
  }
  return out;
}

std::vector<MetricComparison> compare_items(const PairedItems& paired,
                                            const std::vector<std::string>& classes,
                                            const PermutationOptions& options) {
  if (paired.a.empty()) throw ValidationError("the runs share no scored examples");
  const MetricVectors va = metric_vectors(paired.a, classes);
  const MetricVectors vb = metric_vectors(paired.b, classes);
  std::vector<MetricComparison> out;
  const auto add = [&](const char* name, const std::vector<double>& a,
                       const std::vector<double>& b, double sa, double sb) {
    MetricComparison c;
    c.metric = name;
    c.score_a = sa;
    c.score_b = sb;
    c.intersection = paired.a.size();
    c.significance = permutation_test(a, b, va.keys, options);
    out.push_back(std::move(c));
  };
  const ConfusionMatrix ca = matrix_of(paired.a, classes);
  const ConfusionMatrix cb = matrix_of(paired.b, classes);
  add("accuracy", va.accuracy, vb.accuracy, accuracy(ca), accuracy(cb));
  add("uar", va.uar, vb.uar, supported_uar(ca), supported_uar(cb));
  return out;
}

}  // namespace

std::vector<MetricComparison> compare_runs(const std::filesystem::path& run_a,
                                           const std::filesystem::path& run_b,
                                           const TaskSpec& spec,
                                           const PermutationOptions& options) {
  const RunManifest ma = load_manifest(run_a);
  const RunManifest mb = load_manifest(run_b);
  if (ma.task_id != mb.task_id || ma.task_id != spec.task_id) {
    throw ValidationError("cannot compare runs of tasks '" + ma.task_id + "' and '" +
                          mb.task_id + "'");
  }
  if (ma.corpus_fingerprint != mb.corpus_fingerprint) {
    throw ValidationError("runs were made on different corpora");
  }
  return compare_items(intersect(load_predictions(run_a), load_predictions(run_b)),
                       scoring_classes(spec), options);
}

std::string format_comparison(const RunManifest& a, const RunManifest& b,
                              const std::vector<MetricComparison>& rows) {
  std::string out =
      "task_id\tsystem_a\tsystem_b\tmetric\tscore_a\tscore_b\tstatistic\tp_value\tstars\t"
      "intersection\titerations\tseed\n";
  for (const auto& r : rows) {
    out += a.task_id + "\t" + a.system + "\t" + b.system + "\t" + r.metric + "\t" +
           format_fixed(r.score_a) + "\t" + format_fixed(r.score_b) + "\t" +
           format_fixed(r.significance.statistic) + "\t" +
           format_fixed(r.significance.p_value) + "\t" + r.significance.stars + "\t" +
           std::to_string(r.intersection) + "\t" +
           std::to_string(r.significance.iterations) + "\t" +
           std::to_string(r.significance.seed) + "\n";
  }
  return out;
}

ReportTables build_report(const std::vector<std::filesystem::path>& run_dirs,
                          const std::vector<TaskSpec>& catalog,
                          const std::string& baseline_system,
                          const PermutationOptions& options) {
  struct Run {
    RunManifest manifest;
    std::vector<ScoredItem> items;
    double acc = 0.0;
    double uar = 0.0;
    bool scored = false;
  };
  std::vector<Run> runs;
  std::vector<std::string> systems;
  std::vector<std::string> tasks;
  for (const auto& dir : run_dirs) {
    Run r{load_manifest(dir), load_predictions(dir)};
    const TaskSpec& spec = find_task(catalog, r.manifest.task_id);
    const ConfusionMatrix cm = matrix_of(r.items, scoring_classes(spec));
    if (cm.total() > 0) {
      r.acc = accuracy(cm);
      r.uar = supported_uar(cm);
      r.scored = true;
    }
    if (std::find(systems.begin(), systems.end(), r.manifest.system) == systems.end()) {
      systems.push_back(r.manifest.system);
    }
    if (std::find(tasks.begin(), tasks.end(), r.manifest.task_id) == tasks.end()) {
      tasks.push_back(r.manifest.task_id);
    }
    for (const auto& other : runs) {
      if (other.manifest.task_id == r.manifest.task_id &&
          other.manifest.system == r.manifest.system) {
        throw ValidationError("two runs of '" + r.manifest.system + "' on '" +
                              r.manifest.task_id + "'");
      }
    }
    runs.push_back(std::move(r));
  }
  if (!baseline_system.empty()) {
    auto it = std::find(systems.begin(), systems.end(), baseline_system);
    if (it == systems.end()) {
      throw InvalidArgument("baseline system '" + baseline_system + "' has no runs");
    }
    std::rotate(systems.begin(), it, it + 1);
  }

  const auto find_run = [&](const std::string& task, const std::string& system) -> const Run* {
    for (const auto& r : runs) {
      if (r.manifest.task_id == task && r.manifest.system == system) return &r;
    }
    return nullptr;
  };

  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header = {"Dataset", ""};
  for (const auto& s : systems) {
    header.push_back(s + " Acc");
    header.push_back(s + " UAR");
  }
  table.push_back(header);
  std::string tsv = "group\tsub_label\ttask_id\tsystem\tmetric\tvalue\tp_value\tstars\n";

  for (const auto& task : tasks) {
    const TaskSpec& spec = find_task(catalog, task);
    const Run* base = baseline_system.empty() ? nullptr : find_run(task, baseline_system);
    std::vector<std::string> row;
    const Run* any = nullptr;
    for (const auto& s : systems) {
      if ((any = find_run(task, s))) break;
    }
    row.push_back(any->manifest.group);
    row.push_back(any->manifest.sub_label);
    for (const auto& s : systems) {
      const Run* r = find_run(task, s);
      if (r == nullptr || !r->scored) {
        row.insert(row.end(), {"-", "-"});
        continue;
      }
      std::vector<MetricComparison> cmp;
      if (base != nullptr && r != base && base->scored) {
        cmp = compare_items(intersect(r->items, base->items), scoring_classes(spec), options);
      }
      const double values[2] = {r->acc, r->uar};
      const char* names[2] = {"accuracy", "uar"};
      for (int k = 0; k < 2; ++k) {
        const std::string stars = cmp.empty() ? "" : cmp[k].significance.stars;
        row.push_back(format_fixed(100.0 * values[k], 1) + stars);
        tsv += r->manifest.group + "\t" + r->manifest.sub_label + "\t" + task + "\t" + s +
               "\t" + names[k] + "\t" + format_fixed(values[k]) + "\t" +
               (cmp.empty() ? "-" : format_fixed(cmp[k].significance.p_value)) + "\t" +
               stars + "\n";
      }
    }
    table.push_back(std::move(row));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string text;
  for (std::size_t r = 0; r < table.size(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < table[r].size(); ++c) {
      const std::string& cell = table[r][c];
      const std::string pad(width[c] - cell.size(), ' ');
      // Text columns left-aligned, scores right-aligned.
      line += c < 2 ? cell + pad : pad + cell;
      if (c + 1 < table[r].size()) line += "  ";
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    text += line + "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      text += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    }
  }
  text += "* p < 0.05, ** p < 0.01 against " +
          (baseline_system.empty() ? std::string("(no baseline)") : baseline_system) + "\n";
  return {text, tsv};
}

Settings::Settings(std::map<std::string, std::string> cli,
                   std::map<std::string, std::string> env, Json file)
    : cli_(std::move(cli)), env_(std::move(env)), file_(std::move(file)) {
  if (!file_.is_null() && !file_.is_object()) {
    throw ValidationError("config file must hold a JSON object");
  }
}

std::string Settings::env_name(const std::string& name) {
  std::string out = "AFFEVAL_";
  for (char c : name) {
    out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

std::map<std::string, std::string> Settings::environment(
    const std::vector<std::string>& names) {
  std::map<std::string, std::string> out;
  for (const auto& n : names) {
    if (const char* v = std::getenv(env_name(n).c_str()); v != nullptr) out[n] = v;
  }
  return out;
}

std::optional<Setting> Settings::find(const std::string& name) {
  std::optional<Setting> s;
  if (auto it = cli_.find(name); it != cli_.end()) {
    s = Setting{it->second, "cli"};
  } else if (auto e = env_.find(name); e != env_.end()) {
    s = Setting{e->second, "env"};
  } else if (file_.is_object() && file_.contains(name)) {
    const Json& v = file_[name];
    s = Setting{v.is_string() ? v.get<std::string>() : v.dump(), "file"};
  }
  if (s) resolved_[name] = *s;
  return s;
}

Setting Settings::get(const std::string& name, const std::string& fallback) {
  if (auto s = find(name)) return *s;
  Setting d{fallback, "default"};
  resolved_[name] = d;
  return d;
}

OrderedJson Settings::effective() const {
  OrderedJson j = OrderedJson::object();
  for (const auto& [k, s] : resolved_) j[k] = OrderedJson{{"value", s.value}, {"source", s.source}};
  return j;
}

}  // namespace affeval
