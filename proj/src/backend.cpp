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

#include "affeval/backend.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "affeval/error.hpp"
#include "affeval/random.hpp"

namespace affeval {

namespace {

struct Span {
  std::string expression;
  std::string tag;
};

// Maximal runs of one non-background tag.
std::vector<Span> gold_spans(const GoldAnswer& gold) {
  std::vector<Span> out;
  std::size_t i = 0;
  while (i < gold.tags.size()) {
    if (gold.tags[i] == kBackgroundTag) {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::string expression;
    while (j < gold.tags.size() && gold.tags[j] == gold.tags[i]) {
      if (!expression.empty()) expression += ' ';
      expression += gold.words[j];
      ++j;
    }
    out.push_back({expression, gold.tags[i]});
    i = j;
  }
  return out;
}

std::string format_spans(const std::vector<Span>& spans, TaskFamily family) {
  if (spans.empty()) return "BACKGROUND";
  std::string out;
  for (const auto& s : spans) {
    if (!out.empty()) out += '\n';
    if (family == TaskFamily::kTokenTagging) {
      out += "* \"" + s.expression + "\" is " + s.tag;
    } else {
      out += "* " + s.expression;
    }
  }
  return out;
}

const std::vector<std::string>& polarities() {
  static const std::vector<std::string> p = {"positive", "negative", "neutral",
                                             "conflict"};
  return p;
}

std::string pick_other(const std::vector<std::string>& labels, const std::string& label,
                       Rng& rng) {
  std::vector<std::string> others;
  const std::string canon = canonical_label(label);
  for (const auto& l : labels) {
    if (canonical_label(l) != canon) others.push_back(l);
  }
  if (others.empty()) throw InvalidArgument("oracle needs at least two labels");
  return others[uniform_index(rng, others.size())];
}

}  // namespace

void BackendConfig::validate() const {
  if (endpoint_url.empty()) throw InvalidArgument("endpoint_url is empty");
  if (model_name.empty()) throw InvalidArgument("model_name is empty");
  if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
  if (parallelism < 1) throw InvalidArgument("parallelism must be >= 1");
  if (timeout.count() <= 0) throw InvalidArgument("timeout must be positive");
  if (backoff_multiplier < 1.0) throw InvalidArgument("backoff multiplier must be >= 1");
  if (initial_backoff.count() < 0 || max_backoff < initial_backoff) {
    throw InvalidArgument("backoff bounds must satisfy 0 <= initial <= max");
  }
  if (requests_per_second < 0.0) {
    throw InvalidArgument("requests_per_second must be >= 0");
  }
}

OrderedJson BackendConfig::describe() const {
  OrderedJson j;
  j["kind"] = "http";
  j["endpoint_url"] = endpoint_url;
  j["model"] = model_name;
  j["temperature"] = temperature;
  j["timeout_ms"] = timeout.count();
  j["max_retries"] = max_retries;
  j["parallelism"] = parallelism;
  j["auth_token_env"] = auth_token_env;
  j["initial_backoff_ms"] = initial_backoff.count();
  j["backoff_multiplier"] = backoff_multiplier;
  j["max_backoff_ms"] = max_backoff.count();
  j["requests_per_second"] = requests_per_second;
  return j;
}

RetryPolicy::RetryPolicy(std::size_t max_retries, std::chrono::milliseconds initial,
                         double multiplier, std::chrono::milliseconds max)
    : max_retries_(max_retries), initial_(initial), multiplier_(multiplier), max_(max) {
  if (multiplier_ < 1.0) throw InvalidArgument("backoff multiplier must be >= 1");
  if (initial_.count() < 0 || max_ < initial_) {
    throw InvalidArgument("backoff bounds must satisfy 0 <= initial <= max");
  }
}

RetryPolicy::RetryPolicy(const BackendConfig& config)
    : RetryPolicy(config.max_retries, config.initial_backoff, config.backoff_multiplier,
                  config.max_backoff) {}

std::chrono::milliseconds RetryPolicy::delay(std::size_t retry) const {
  const double raw = static_cast<double>(initial_.count()) *
                     std::pow(multiplier_, static_cast<double>(retry));
  const double capped = std::min(raw, static_cast<double>(max_.count()));
  return std::chrono::milliseconds(static_cast<std::int64_t>(capped));
}

bool is_retryable_status(int status) { return status == 429 || status >= 500; }

std::string_view to_string(ExchangeFailure failure) {
  switch (failure) {
    case ExchangeFailure::kNone:
      return "none";
    case ExchangeFailure::kTransport:
      return "transport";
    case ExchangeFailure::kProtocol:
      return "protocol";
  }
  return "unknown";
}

OrderedJson chat_request_body(const MessagePair& messages, std::string_view model,
                              double temperature) {
  OrderedJson body;
  body["model"] = std::string(model);
  body["temperature"] = temperature;
  body["messages"] = OrderedJson::array({
      OrderedJson{{"role", "system"}, {"content", messages.system}},
      OrderedJson{{"role", "user"}, {"content", messages.user}},
  });
  return body;
}

std::string parse_chat_response(std::string_view body) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::parse_error&) {
    throw ProtocolError("response is not JSON: " + std::string(body));
  }
  const auto fail = [&](const std::string& what) {
    throw ProtocolError(what + ": " + std::string(body));
  };
  if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() ||
      j["choices"].empty()) {
    fail("response has no choices");
  }
  const Json& choice = j["choices"][0];
  if (!choice.is_object() || !choice.contains("message") ||
      !choice["message"].is_object()) {
    fail("first choice has no message");
  }
  const Json& message = choice["message"];
  if (!message.contains("content") || !message["content"].is_string()) {
    fail("message has no content");
  }
  return message["content"].get<std::string>();
}

void OracleConfig::validate() const {
  if (!(error_rate >= 0.0 && error_rate <= 1.0)) {
    throw InvalidArgument("error_rate must lie in [0, 1]");
  }
  if (!(corruption_rate >= 0.0 && corruption_rate <= 1.0)) {
    throw InvalidArgument("corruption_rate must lie in [0, 1]");
  }
}

OrderedJson OracleConfig::describe() const {
  OrderedJson j;
  j["kind"] = "oracle";
  j["error_rate"] = error_rate;
  j["corruption_rate"] = corruption_rate;
  j["seed"] = seed;
  return j;
}

std::string oracle_complete(const GoldAnswer& gold, std::string_view example_id,
                            const OracleConfig& config) {
  Rng rng = make_rng(derive_seed(config.seed, example_id));
  const bool wrong = uniform01(rng) < config.error_rate;
  const bool corrupt = uniform01(rng) < config.corruption_rate;

  switch (gold.family) {
    case TaskFamily::kBinaryChoice:
    case TaskFamily::kScalarRanking: {
      const std::string answer = wrong ? pick_other(gold.label_set, gold.label, rng)
                                       : gold.label;
      if (!corrupt) return answer;
      // Names a second label, so neither parsing pass can accept it.
      return "I think it is " + answer + ", but it could also be " +
             pick_other(gold.label_set, answer, rng) + ".";
    }
    case TaskFamily::kTokenTagging:
    case TaskFamily::kExpressionExtraction: {
      if (gold.words.size() != gold.tags.size()) {
        throw InvalidArgument("oracle gold has mismatched words and tags");
      }
      std::vector<Span> spans = gold_spans(gold);
      if (wrong) {
        if (!spans.empty()) {
          spans.erase(spans.begin() +
                      static_cast<std::ptrdiff_t>(uniform_index(rng, spans.size())));
        } else if (!gold.words.empty()) {
          const std::string& word = gold.words[uniform_index(rng, gold.words.size())];
          const std::string tag = gold.family == TaskFamily::kTokenTagging
                                      ? polarities()[uniform_index(rng, 4)]
                                      : "opinion";
          spans.push_back({word, tag});
        }
      }
      const std::string reply = format_spans(spans, gold.family);
      if (!corrupt) return reply;
      return "My guess is:\n" + reply;
    }
  }
  return {};
}

OracleBackend::OracleBackend(OracleConfig config) : config_(config) { config_.validate(); }

std::string OracleBackend::system_name() const {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "oracle(e=%.2f,c=%.2f)", config_.error_rate,
                config_.corruption_rate);
  return buf;
}

ChatExchange OracleBackend::complete(const Query& query) {
  if (!query.gold) {
    throw InvalidArgument("oracle backend needs gold for example '" + query.example_id +
                          "'");
  }
  ChatExchange ex;
  ex.system = query.messages.system;
  ex.user = query.messages.user;
  ex.reply = oracle_complete(*query.gold, query.example_id, config_);
  ex.attempt_count = 1;
  return ex;
}

RateLimiter::RateLimiter(double rate, double burst)
    : rate_(rate), burst_(std::max(1.0, burst)), tokens_(std::max(1.0, burst)),
      last_(Clock::now()) {
  if (!(rate_ > 0.0)) throw InvalidArgument("rate limiter needs a positive rate");
}

void RateLimiter::acquire() {
  for (;;) {
    std::chrono::duration<double> wait{0.0};
    {
      std::lock_guard<std::mutex> lock(mu_);
      const auto now = Clock::now();
      const std::chrono::duration<double> elapsed = now - last_;
      tokens_ = std::min(burst_, tokens_ + elapsed.count() * rate_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    }
    std::this_thread::sleep_for(wait);
  }
}

std::vector<ChatExchange> run_batch(ChatBackend& backend, std::span<const Query> queries,
                                    const BatchOptions& options) {
  if (options.parallelism < 1) throw InvalidArgument("parallelism must be >= 1");
  std::vector<ChatExchange> results(queries.size());
  std::unique_ptr<RateLimiter> limiter;
  if (options.requests_per_second > 0.0) {
    limiter = std::make_unique<RateLimiter>(options.requests_per_second,
                                            static_cast<double>(options.parallelism));
  }

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= queries.size()) return;
      if (limiter) limiter->acquire();
      try {
        results[i] = backend.complete(queries[i]);
      } catch (const std::exception& e) {
        ChatExchange failed;
        failed.system = queries[i].messages.system;
        failed.user = queries[i].messages.user;
        failed.failure = ExchangeFailure::kTransport;
        failed.failure_detail = e.what();
        results[i] = std::move(failed);
      }
    }
  };

  const std::size_t workers = std::min(options.parallelism, queries.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return results;
}

TranscriptRecord make_transcript_record(std::string_view task_id,
                                        std::string_view example_id,
                                        const ChatExchange& exchange) {
  TranscriptRecord r;
  r.task_id = task_id;
  r.example_id = example_id;
  r.system = exchange.system;
  r.user = exchange.user;
  r.reply = exchange.reply;
  r.attempts = exchange.attempt_count;
  r.latency_ms = exchange.latency.count();
  r.failure = exchange.failure;
  r.error = exchange.failure_detail;
  return r;
}

std::string serialize_transcript_record(const TranscriptRecord& record) {
  OrderedJson j;
  j["task_id"] = record.task_id;
  j["example_id"] = record.example_id;
  j["system"] = record.system;
  j["user"] = record.user;
  j["reply"] = record.reply ? OrderedJson(*record.reply) : OrderedJson(nullptr);
  j["attempts"] = record.attempts;
  j["latency_ms"] = record.latency_ms;
  if (record.failure != ExchangeFailure::kNone) {
    j["failure"] = std::string(to_string(record.failure));
    j["error"] = record.error;
  }
  return j.dump();
}

TranscriptLog::TranscriptLog(const std::filesystem::path& path) : path_(path) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream touch(path_, std::ios::app);
  if (!touch) throw Error("cannot open transcript " + path_.string());
}

void TranscriptLog::append(const TranscriptRecord& record) {
  const std::string line = serialize_transcript_record(record) + "\n";
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out << line;
  if (!out) throw Error("failed appending to transcript " + path_.string());
}

std::vector<TranscriptRecord> parse_transcript(std::istream& in) {
  std::vector<TranscriptRecord> out;
  for_each_record(in, [&](std::size_t line, const Json& j) {
    RecordReader r(j, line);
    TranscriptRecord rec;
    rec.task_id = r.string("task_id");
    rec.example_id = r.string("example_id");
    rec.system = r.string("system");
    rec.user = r.string("user");
    const Json& reply = r.raw("reply");
    if (reply.is_string()) {
      rec.reply = reply.get<std::string>();
    } else if (!reply.is_null()) {
      throw IngestionError(line, "reply", "expected a string or null");
    }
    rec.attempts = static_cast<std::size_t>(r.integer("attempts"));
    rec.latency_ms = r.integer("latency_ms");
    if (r.has("failure")) {
      const std::string f = r.string("failure");
      if (f == "transport") {
        rec.failure = ExchangeFailure::kTransport;
      } else if (f == "protocol") {
        rec.failure = ExchangeFailure::kProtocol;
      } else {
        throw IngestionError(line, "failure", "unknown failure kind '" + f + "'");
      }
    }
    if (r.has("error")) rec.error = r.string("error");
    r.finish();
    if (rec.reply.has_value() == (rec.failure != ExchangeFailure::kNone)) {
      throw IngestionError(line, "reply", "reply must be present iff no failure");
    }
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<TranscriptRecord> load_transcript(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open transcript " + path.string());
  return parse_transcript(in);
}

}  // namespace affeval
