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

// Hand-written validator for the chat-completion request body:
//   object with exactly {model: non-empty string, temperature: number >= 0,
//   messages: [{role: "system", content: string},
//              {role: "user", content: string}]}

#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace affeval::testing {

inline std::vector<std::string> chat_request_violations(const nlohmann::json& body) {
  std::vector<std::string> v;
  if (!body.is_object()) return {"body is not an object"};
  const std::set<std::string> allowed = {"model", "temperature", "messages"};
  for (const auto& [k, _] : body.items()) {
    if (!allowed.contains(k)) v.push_back("unexpected field '" + k + "'");
  }
  for (const auto& k : allowed) {
    if (!body.contains(k)) v.push_back("missing field '" + k + "'");
  }
  if (body.contains("model") &&
      (!body["model"].is_string() || body["model"].get<std::string>().empty())) {
    v.push_back("model must be a non-empty string");
  }
  if (body.contains("temperature") &&
      (!body["temperature"].is_number() || body["temperature"].get<double>() < 0.0)) {
    v.push_back("temperature must be a number >= 0");
  }
  if (body.contains("messages")) {
    const auto& m = body["messages"];
    if (!m.is_array() || m.size() != 2) {
      v.push_back("messages must be an array of two entries");
    } else {
      const char* roles[2] = {"system", "user"};
      for (std::size_t i = 0; i < 2; ++i) {
        const auto& e = m[i];
        if (!e.is_object() || e.size() != 2 || !e.contains("role") ||
            !e.contains("content")) {
          v.push_back("message " + std::to_string(i) + " must hold exactly role and content");
          continue;
        }
        if (e["role"] != roles[i]) {
          v.push_back("message " + std::to_string(i) + " must have role " + roles[i]);
        }
        if (!e["content"].is_string()) {
          v.push_back("message " + std::to_string(i) + " content must be a string");
        }
      }
    }
  }
  return v;
}

}  // namespace affeval::testing
