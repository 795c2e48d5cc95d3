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

// Local chat-completion stub. Replies follow a script, then a fallback;
// every request is captured.

#include <httplib.h>

#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "json.hpp"

namespace affeval::testing {

struct StubReply {
  int status = 200;
  std::string body;
};

inline StubReply ok_reply(const std::string& content) {
  nlohmann::json j = {
      {"id", "chatcmpl-stub"},
      {"object", "chat.completion"},
      {"choices",
       {{{"index", 0},
         {"message", {{"role", "assistant"}, {"content", content}}},
         {"finish_reason", "stop"}}}}};
  return {200, j.dump()};
}

struct CapturedRequest {
  std::string path;
  std::string body;
  std::string authorization;
  std::string content_type;
};

class StubServer {
 public:
  explicit StubServer(std::vector<StubReply> script, StubReply fallback = ok_reply("positive"))
      : script_(std::move(script)), fallback_(std::move(fallback)) {
    server_.Post(".*", [this](const httplib::Request& req, httplib::Response& res) {
      StubReply reply;
      {
        std::lock_guard<std::mutex> lock(mu_);
        requests_.push_back({req.path, req.body, req.get_header_value("Authorization"),
                             req.get_header_value("Content-Type")});
        reply = next_ < script_.size() ? script_[next_++] : fallback_;
      }
      res.status = reply.status;
      res.set_content(reply.body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("stub server could not bind");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  std::string url(const std::string& prefix = "/v1") const {
    return "http://127.0.0.1:" + std::to_string(port_) + prefix;
  }

  std::vector<CapturedRequest> requests() const {
    std::lock_guard<std::mutex> lock(mu_);
    return requests_;
  }

 private:
  httplib::Server server_;
  std::vector<StubReply> script_;
  StubReply fallback_;
  std::size_t next_ = 0;
  std::vector<CapturedRequest> requests_;
  mutable std::mutex mu_;
  int port_ = 0;
  std::thread thread_;
};

// A port nothing listens on.
// A loopback port nothing listens on: bound once, then released.
inline int closed_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

}  // namespace affeval::testing
