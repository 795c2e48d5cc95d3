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

// Model backends: an OpenAI-compatible chat-completion client and a
// deterministic oracle that answers from gold labels.
//
// Wire format: POST <endpoint_url>/chat/completions with
//   {"model": str, "temperature": num,
//    "messages": [{"role": "system", "content": str},
//                 {"role": "user", "content": str}]}
// and the reply read from choices[0].message.content.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "affeval/corpus.hpp"
#include "affeval/jsonl.hpp"
#include "affeval/prompting.hpp"

namespace affeval {

inline constexpr std::string_view kGpt35Model = "gpt-3.5-turbo-0301";
inline constexpr std::string_view kGpt4Model = "gpt-4-0314";

struct BackendConfig {
  std::string endpoint_url = "https://api.openai.com/v1";
  std::string model_name = std::string(kGpt35Model);
  double temperature = 0.0;
  std::chrono::milliseconds timeout{60000};
  std::size_t max_retries = 3;
  std::size_t parallelism = 1;
  // Name of the environment variable holding the bearer token. The token
  // itself is never stored in the config.
  std::string auth_token_env = "OPENAI_API_KEY";
  std::chrono::milliseconds initial_backoff{1000};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30000};
  // Client-side request rate limit; 0 disables it.
  double requests_per_second = 0.0;

  void validate() const;
  OrderedJson describe() const;
};

// Delay before retry k (0-based): initial * multiplier^k, capped at max.
// The schedule is non-decreasing.
class RetryPolicy {
 public:
  RetryPolicy(std::size_t max_retries, std::chrono::milliseconds initial,
              double multiplier, std::chrono::milliseconds max);
  explicit RetryPolicy(const BackendConfig& config);

  std::size_t max_retries() const { return max_retries_; }
  std::chrono::milliseconds delay(std::size_t retry) const;

 private:
  std::size_t max_retries_;
  std::chrono::milliseconds initial_;
  double multiplier_;
  std::chrono::milliseconds max_;
};

// 429 and 5xx are transient.
bool is_retryable_status(int status);

enum class ExchangeFailure { kNone, kTransport, kProtocol };
std::string_view to_string(ExchangeFailure failure);

struct ChatExchange {
  std::string system;
  std::string user;
  std::optional<std::string> reply;  // absent iff failure != kNone
  ExchangeFailure failure = ExchangeFailure::kNone;
  std::string failure_detail;  // status line or captured response body
  std::size_t attempt_count = 0;
  std::chrono::milliseconds latency{0};
};

OrderedJson chat_request_body(const MessagePair& messages, std::string_view model,
                              double temperature);

// Content of choices[0].message.content. Throws ProtocolError otherwise.
class ProtocolError : public Error {
 public:
  using Error::Error;
};
std::string parse_chat_response(std::string_view body);

// What the oracle needs to answer one query.
struct GoldAnswer {
  TaskFamily family = TaskFamily::kBinaryChoice;
  std::string label;                   // display form; "A"/"B" for pairs
  std::vector<std::string> label_set;  // display forms
  std::vector<std::string> words;      // token families
  std::vector<std::string> tags;       // raw tags from the corpus
};

struct Query {
  std::string example_id;
  MessagePair messages;
  std::optional<GoldAnswer> gold;  // oracle backend only
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatExchange complete(const Query& query) = 0;
  // Descriptor echoed into run manifests. Never contains secrets.
  virtual OrderedJson describe() const = 0;
  virtual std::string system_name() const = 0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(BackendConfig config, Sleeper sleeper = {});

  ChatExchange complete(const Query& query) override;
  ChatExchange complete(const MessagePair& messages);
  OrderedJson describe() const override { return config_.describe(); }
  std::string system_name() const override { return config_.model_name; }

  const BackendConfig& config() const { return config_; }

 private:
  BackendConfig config_;
  Sleeper sleeper_;
  std::string base_;  // scheme://host[:port]
  std::string path_;  // request path ending in /chat/completions
};

struct OracleConfig {
  double error_rate = 0.0;
  double corruption_rate = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  OrderedJson describe() const;
};

// With probability 1 - error_rate the gold answer in the family's reply
// format, otherwise a wrong answer; independently, with probability
// corruption_rate, the reply is wrapped in a format the parsers reject.
// Draws depend only on (seed, example_id).
std::string oracle_complete(const GoldAnswer& gold, std::string_view example_id,
                            const OracleConfig& config);

class OracleBackend : public ChatBackend {
 public:
  explicit OracleBackend(OracleConfig config);

  ChatExchange complete(const Query& query) override;
  OrderedJson describe() const override { return config_.describe(); }
  std::string system_name() const override;

 private:
  OracleConfig config_;
};

// Token bucket: `rate` tokens per second, holding at most `burst` tokens.
class RateLimiter {
 public:
  RateLimiter(double rate, double burst);
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  double rate_;
  double burst_;
  double tokens_;
  Clock::time_point last_;
  std::mutex mu_;
};

struct BatchOptions {
  std::size_t parallelism = 1;
  double requests_per_second = 0.0;
};

// Runs every query with at most `parallelism` in flight. Results are in query
// order regardless of completion order.
std::vector<ChatExchange> run_batch(ChatBackend& backend, std::span<const Query> queries,
                                    const BatchOptions& options);

struct TranscriptRecord {
  std::string task_id;
  std::string example_id;
  std::string system;
  std::string user;
  std::optional<std::string> reply;
  std::size_t attempts = 0;
  std::int64_t latency_ms = 0;
  ExchangeFailure failure = ExchangeFailure::kNone;
  std::string error;

  bool operator==(const TranscriptRecord&) const = default;
};

TranscriptRecord make_transcript_record(std::string_view task_id,
                                        std::string_view example_id,
                                        const ChatExchange& exchange);

// Append-only transcript sink; appends from several threads are serialized.
class TranscriptLog {
 public:
  explicit TranscriptLog(const std::filesystem::path& path);
  void append(const TranscriptRecord& record);

 private:
  std::mutex mu_;
  std::filesystem::path path_;
};

std::string serialize_transcript_record(const TranscriptRecord& record);
std::vector<TranscriptRecord> load_transcript(const std::filesystem::path& path);
std::vector<TranscriptRecord> parse_transcript(std::istream& in);

}  // namespace affeval
