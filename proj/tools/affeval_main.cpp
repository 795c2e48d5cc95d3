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

// affeval: ingest | pairs | run | score | compare | report | synth

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "affeval/backend.hpp"
#include "affeval/corpus.hpp"
#include "affeval/error.hpp"
#include "affeval/fixtures.hpp"
#include "affeval/harness.hpp"
#include "affeval/pairrank.hpp"

namespace fs = std::filesystem;
using namespace affeval;

namespace {

struct TaskArgs {
  std::string task = "tasks/catalog.json";
  std::string task_id;

  void add(CLI::App* app) {
    app->add_option("--task", task, "Task spec or catalog JSON")->capture_default_str();
    app->add_option("--task-id", task_id, "Task to pick from a catalog");
  }

  TaskSpec resolve() const {
    const auto specs = load_task_specs(task);
    if (!task_id.empty()) return find_task(specs, task_id);
    if (specs.size() != 1) {
      throw InvalidArgument(task + " holds " + std::to_string(specs.size()) +
                            " tasks; pick one with --task-id");
    }
    return specs.front();
  }
};

// Flags that take part in CLI > env > file resolution.
// Settings resolved CLI > AFFEVAL_<NAME> env > config file > default.
const std::vector<std::pair<std::string, std::string>> kLayeredHelp = {
    {"backend", "oracle or http"},
    {"endpoint", "Base URL of the chat-completions API"},
    {"model", "Model name sent with every request"},
    {"temperature", "Sampling temperature"},
    {"parallelism", "Requests in flight"},
    {"seed", "Master seed for sampling, presentation, tests and the oracle"},
    {"pairs-multiplier", "Pairs per item for ranking tasks"},
    {"downsample", "Score a uniform sample of this many test records"},
    {"error-rate", "Oracle: probability of a wrong answer"},
    {"corruption-rate", "Oracle: probability of an unparseable reply"},
    {"max-retries", "Retries on connection errors, 429 and 5xx"},
    {"timeout-ms", "Per-request timeout"},
    {"requests-per-second", "Client-side rate limit, 0 for none"},
    {"auth-token-env", "Environment variable holding the bearer token"}};

const std::vector<std::string> kLayered = [] {
  std::vector<std::string> names;
  for (const auto& [name, _] : kLayeredHelp) names.push_back(name);
  return names;
}();

std::uint64_t to_u64(const Setting& s, const char* name) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s.value, &pos);
    if (pos != s.value.size()) throw std::invalid_argument(name);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument(std::string(name) + " must be a non-negative integer, got '" +
                          s.value + "' (" + s.source + ")");
  }
}

double to_double(const Setting& s, const char* name) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s.value, &pos);
    if (pos != s.value.size()) throw std::invalid_argument(name);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument(std::string(name) + " must be a number, got '" + s.value +
                          "' (" + s.source + ")");
  }
}

int cmd_ingest(const TaskArgs& t, const std::string& corpus_path) {
  const TaskSpec spec = t.resolve();
  const Corpus corpus = load_corpus(corpus_path, spec);
  const CorpusSplit split = corpus.split();
  std::cout << spec.task_id << ": " << corpus.size() << " records (train "
            << split.train_count() << ", dev " << split.dev_count() << ", test "
            << split.test_count() << ")\n";
  return 0;
}

int cmd_pairs(const TaskArgs& t, const std::string& corpus_path, std::uint64_t seed,
              std::size_t multiplier, const std::string& out) {
  const TaskSpec spec = t.resolve();
  if (spec.family != TaskFamily::kScalarRanking) {
    throw InvalidArgument("'" + spec.task_id + "' is not a ranking task");
  }
  const Corpus corpus = load_corpus(corpus_path, spec);
  const PairBuild build = make_pairs(corpus, multiplier, Seeds::from(seed));
  write_pair_instances(fs::path(out), build.instances);
  std::cout << build.instances.size() << " pairs (" << build.ties_discarded
            << " ties discarded, " << build.resampled << " resampled"
            << (build.short_of_target ? ", short of target" : "") << ") -> " << out << "\n";
  return 0;
}

int cmd_score(const TaskArgs& t, const std::string& corpus_path, const std::string& run_dir) {
  const TaskSpec spec = t.resolve();
  const Corpus corpus = load_corpus(corpus_path, spec);
  score_run(spec, corpus, run_dir);
  std::cout << read_file(fs::path(run_dir) / "results.tsv");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluate chat models on affective computing tasks"};
  app.require_subcommand(1);

  // ingest
  TaskArgs ingest_task;
  std::string ingest_corpus;
  auto* ingest = app.add_subcommand("ingest", "Validate a corpus against a task");
  ingest_task.add(ingest);
  ingest->add_option("--corpus", ingest_corpus, "Corpus JSONL")->required();

  // pairs
  TaskArgs pairs_task;
  std::string pairs_corpus;
  std::string pairs_out = "pairs.jsonl";
  std::uint64_t pairs_seed = 0;
  std::size_t pairs_mult = kDefaultPairsMultiplier;
  auto* pairs = app.add_subcommand("pairs", "Sample comparison pairs for a ranking task");
  pairs_task.add(pairs);
  pairs->add_option("--corpus", pairs_corpus, "Corpus JSONL")->required();
  pairs->add_option("--seed", pairs_seed)->capture_default_str();
  pairs->add_option("--pairs-multiplier", pairs_mult)->capture_default_str();
  pairs->add_option("--out", pairs_out)->capture_default_str();

  // run
  TaskArgs run_task_args;
  std::string run_corpus;
  std::string run_out;
  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a task end to end");
  run_task_args.add(run);
  run->add_option("--corpus", run_corpus, "Corpus JSONL")->required();
  run->add_option("--out-dir", run_out, "Run directory")->required();
  run->add_option("--config", config_path, "JSON config file");
  std::map<std::string, std::string> layered_raw;
  for (const auto& [name, help] : kLayeredHelp) {
    run->add_option("--" + name, layered_raw[name], help);
  }

  // score
  TaskArgs score_task;
  std::string score_corpus;
  std::string score_dir;
  auto* score = app.add_subcommand("score", "Re-score a stored transcript");
  score_task.add(score);
  score->add_option("--corpus", score_corpus, "Corpus JSONL")->required();
  score->add_option("--out-dir,--run-dir", score_dir, "Run directory")->required();

  // compare
  TaskArgs compare_task;
  std::string run_a;
  std::string run_b;
  std::string compare_out = ".";
  std::size_t compare_iters = kDefaultPermutationIterations;
  std::uint64_t compare_seed = 0;
  auto* compare = app.add_subcommand("compare", "Paired significance test of two runs");
  compare_task.add(compare);
  compare->add_option("--run-a", run_a)->required();
  compare->add_option("--run-b", run_b)->required();
  compare->add_option("--iterations", compare_iters)->capture_default_str();
  compare->add_option("--seed", compare_seed)->capture_default_str();
  compare->add_option("--out-dir", compare_out)->capture_default_str();

  // report
  std::string report_catalog = "tasks/catalog.json";
  std::vector<std::string> report_runs;
  std::string report_baseline;
  std::string report_out = ".";
  std::size_t report_iters = kDefaultPermutationIterations;
  std::uint64_t report_seed = 0;
  auto* report = app.add_subcommand("report", "Assemble the results matrix");
  report->add_option("--task", report_catalog, "Task catalog")->capture_default_str();
  report->add_option("--runs", report_runs, "Run directories")->required();
  report->add_option("--baseline", report_baseline, "System the stars compare against");
  report->add_option("--iterations", report_iters)->capture_default_str();
  report->add_option("--seed", report_seed)->capture_default_str();
  report->add_option("--out-dir", report_out)->capture_default_str();

  // synth
  TaskArgs synth_task;
  std::size_t synth_n = 100;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus for a task");
  synth_task.add(synth);
  synth->add_option("--n", synth_n)->capture_default_str();
  synth->add_option("--seed", synth_seed)->capture_default_str();
  synth->add_option("--out", synth_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(ingest_task, ingest_corpus);
    if (*pairs) return cmd_pairs(pairs_task, pairs_corpus, pairs_seed, pairs_mult, pairs_out);
    if (*score) return cmd_score(score_task, score_corpus, score_dir);

    if (*run) {
      std::map<std::string, std::string> cli;
      for (const auto& name : kLayered) {
        if (run->count("--" + name) > 0) cli[name] = layered_raw[name];
      }
      Json file = Json::object();
      if (!config_path.empty()) {
        try {
          file = Json::parse(read_file(config_path));
        } catch (const Json::parse_error& e) {
          throw ValidationError(config_path + ": " + e.what());
        }
      }
      Settings settings(cli, Settings::environment(kLayered), file);

      const std::string kind = settings.get("backend", "oracle").value;
      const std::uint64_t seed = to_u64(settings.get("seed", "0"), "seed");
      RunOptions opts;
      opts.out_dir = run_out;
      opts.seeds = Seeds::from(seed);
      opts.pairs_multiplier = static_cast<std::size_t>(
          to_u64(settings.get("pairs-multiplier", std::to_string(kDefaultPairsMultiplier)),
                 "pairs-multiplier"));
      if (auto d = settings.find("downsample")) {
        opts.downsample = static_cast<std::size_t>(to_u64(*d, "downsample"));
      }
      opts.batch.parallelism =
          static_cast<std::size_t>(to_u64(settings.get("parallelism", "1"), "parallelism"));

      std::unique_ptr<ChatBackend> backend;
      if (kind == "oracle") {
        OracleConfig oc;
        oc.error_rate = to_double(settings.get("error-rate", "0"), "error-rate");
        oc.corruption_rate =
            to_double(settings.get("corruption-rate", "0"), "corruption-rate");
        oc.seed = seed;
        backend = std::make_unique<OracleBackend>(oc);
      } else if (kind == "http") {
        BackendConfig bc;
        bc.endpoint_url = settings.get("endpoint", bc.endpoint_url).value;
        bc.model_name = settings.get("model", bc.model_name).value;
        bc.temperature = to_double(settings.get("temperature", "0"), "temperature");
        bc.parallelism = opts.batch.parallelism;
        bc.max_retries = static_cast<std::size_t>(
            to_u64(settings.get("max-retries", std::to_string(bc.max_retries)), "max-retries"));
        bc.timeout = std::chrono::milliseconds(
            to_u64(settings.get("timeout-ms", std::to_string(bc.timeout.count())), "timeout-ms"));
        bc.requests_per_second = to_double(settings.get("requests-per-second", "0"),
                                           "requests-per-second");
        bc.auth_token_env = settings.get("auth-token-env", bc.auth_token_env).value;
        opts.batch.requests_per_second = bc.requests_per_second;
        backend = std::make_unique<HttpChatBackend>(bc);
      } else {
        throw InvalidArgument("--backend must be http or oracle, got '" + kind + "'");
      }
      opts.config = settings.effective();

      const TaskSpec spec = run_task_args.resolve();
      const Corpus corpus = load_corpus(run_corpus, spec);
      const RunManifest m = run_task(spec, corpus, *backend, opts);
      std::cout << "run " << m.run_id << " " << m.task_id << ": total " << m.counts.total
                << ", scored " << m.counts.scored << ", excluded " << m.counts.excluded
                << " -> " << run_out << "\n";
      std::cout << read_file(fs::path(run_out) / "results.tsv");
      return 0;
    }

    if (*compare) {
      const TaskSpec spec = compare_task.resolve();
      PermutationOptions po;
      po.iterations = compare_iters;
      po.seed = compare_seed;
      po.workers = std::max(1u, std::thread::hardware_concurrency());
      const auto rows = compare_runs(run_a, run_b, spec, po);
      const std::string tsv = format_comparison(load_manifest(run_a), load_manifest(run_b), rows);
      write_file(fs::path(compare_out) / "compare.tsv", tsv);
      std::cout << tsv;
      return 0;
    }

    if (*report) {
      const auto catalog = load_task_specs(report_catalog);
      std::vector<fs::path> dirs(report_runs.begin(), report_runs.end());
      PermutationOptions po;
      po.iterations = report_iters;
      po.seed = report_seed;
      po.workers = std::max(1u, std::thread::hardware_concurrency());
      const ReportTables tables = build_report(dirs, catalog, report_baseline, po);
      write_file(fs::path(report_out) / "report.txt", tables.text);
      write_file(fs::path(report_out) / "report.tsv", tables.tsv);
      std::cout << tables.text;
      return 0;
    }

    if (*synth) {
      const TaskSpec spec = synth_task.resolve();
      write_corpus(fs::path(synth_out), synth_corpus(spec, synth_n, synth_seed));
      std::cout << synth_n << " records -> " << synth_out << "\n";
      return 0;
    }
  } catch (const affeval::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
