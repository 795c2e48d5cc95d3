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

// Helpers for the line-delimited JSON record files used throughout: corpora,
// pair sets, transcripts and per-example predictions.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <istream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "affeval/error.hpp"

namespace affeval {

using Json = nlohmann::json;
// Preserves insertion order, so serialized records keep a stable field order.
using OrderedJson = nlohmann::ordered_json;

// Calls `fn(line_number, record)` for every non-blank line. Line numbers are
// 1-based. Throws IngestionError on invalid JSON or non-object lines.
void for_each_record(std::istream& in,
                     const std::function<void(std::size_t, const Json&)>& fn);

void for_each_record(const std::filesystem::path& path,
                     const std::function<void(std::size_t, const Json&)>& fn);

// Strict accessor for one record: every field must be read or explicitly
// allowed, otherwise finish() rejects the record.
class RecordReader {
 public:
  RecordReader(const Json& record, std::size_t line);

  std::string string(const std::string& field);
  std::vector<std::string> string_list(const std::string& field);
  double number(const std::string& field);
  std::int64_t integer(const std::string& field);
  bool has(const std::string& field) const;
  const Json& raw(const std::string& field);

  // Throws if the record holds a field that was never accessed.
  void finish() const;

  std::size_t line() const { return line_; }

 private:
  const Json& require(const std::string& field);

  const Json& record_;
  std::size_t line_;
  std::set<std::string> seen_;
};

// Writes `text` to `path` atomically enough for our purposes: write to a
// sibling temporary and rename over the destination.
void write_file(const std::filesystem::path& path, const std::string& text);

std::string read_file(const std::filesystem::path& path);

}  // namespace affeval
