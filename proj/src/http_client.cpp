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

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "affeval/backend.hpp"
#include "affeval/error.hpp"

namespace affeval {

namespace {

void split_url(const std::string& url, std::string& base, std::string& path) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw InvalidArgument("endpoint_url needs a scheme: '" + url + "'");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw InvalidArgument("unsupported endpoint scheme '" + scheme + "'");
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") {
    throw InvalidArgument("https endpoints need a build with OpenSSL");
  }
#endif
  const auto host_begin = scheme_end + 3;
  const auto path_begin = url.find('/', host_begin);
  if (path_begin == host_begin) throw InvalidArgument("endpoint_url has no host");
  base = url.substr(0, path_begin);
  path = path_begin == std::string::npos ? std::string() : url.substr(path_begin);
  while (!path.empty() && path.back() == '/') path.pop_back();
  path += "/chat/completions";
}

}  // namespace

HttpChatBackend::HttpChatBackend(BackendConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleeper_(std::move(sleeper)) {
  config_.validate();
  split_url(config_.endpoint_url, base_, path_);
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

ChatExchange HttpChatBackend::complete(const Query& query) {
  return complete(query.messages);
}

ChatExchange HttpChatBackend::complete(const MessagePair& messages) {
  ChatExchange ex;
  ex.system = messages.system;
  ex.user = messages.user;

  const std::string body =
      chat_request_body(messages, config_.model_name, config_.temperature).dump();
  httplib::Headers headers;
  if (const char* token = std::getenv(config_.auth_token_env.c_str());
      token != nullptr && *token != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  httplib::Client client(base_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  const RetryPolicy policy(config_);
  const auto started = std::chrono::steady_clock::now();
  for (std::size_t attempt = 0;; ++attempt) {
    ex.attempt_count = attempt + 1;
    auto res = client.Post(path_, headers, body, "application/json");

    bool retryable = false;
    if (!res) {
      ex.failure_detail = "connection failed: " + httplib::to_string(res.error());
      retryable = true;
    } else if (res->status >= 200 && res->status < 300) {
      try {
        ex.reply = parse_chat_response(res->body);
        ex.failure = ExchangeFailure::kNone;
        ex.failure_detail.clear();
      } catch (const ProtocolError&) {
        ex.failure = ExchangeFailure::kProtocol;
        ex.failure_detail = res->body;
      }
      break;
    } else {
      ex.failure_detail = "HTTP " + std::to_string(res->status) + ": " + res->body;
      retryable = is_retryable_status(res->status);
    }

    if (!retryable || attempt >= policy.max_retries()) {
      ex.failure = ExchangeFailure::kTransport;
      break;
    }
    sleeper_(policy.delay(attempt));
  }
  ex.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  return ex;
}

}  // namespace affeval
