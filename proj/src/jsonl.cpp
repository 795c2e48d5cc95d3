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

#include "affeval/jsonl.hpp"

#include <fstream>
#include <sstream>

namespace affeval {

namespace {

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

void for_each_record(std::istream& in,
                     const std::function<void(std::size_t, const Json&)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw IngestionError(line_no, "", std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) {
      throw IngestionError(line_no, "", "record is not a JSON object");
    }
    fn(line_no, record);
  }
}

void for_each_record(const std::filesystem::path& path,
                     const std::function<void(std::size_t, const Json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  for_each_record(in, fn);
}

RecordReader::RecordReader(const Json& record, std::size_t line)
    : record_(record), line_(line) {}

const Json& RecordReader::require(const std::string& field) {
  auto it = record_.find(field);
  if (it == record_.end()) throw IngestionError(line_, field, "missing field");
  seen_.insert(field);
  return *it;
}

bool RecordReader::has(const std::string& field) const {
  return record_.contains(field);
}

const Json& RecordReader::raw(const std::string& field) { return require(field); }

std::string RecordReader::string(const std::string& field) {
  const Json& v = require(field);
  if (!v.is_string()) throw IngestionError(line_, field, "expected a string");
  return v.get<std::string>();
}

std::vector<std::string> RecordReader::string_list(const std::string& field) {
  const Json& v = require(field);
  if (!v.is_array()) throw IngestionError(line_, field, "expected a list");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const Json& item : v) {
    if (!item.is_string()) {
      throw IngestionError(line_, field, "expected a list of strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

double RecordReader::number(const std::string& field) {
  const Json& v = require(field);
  if (!v.is_number()) throw IngestionError(line_, field, "expected a number");
  return v.get<double>();
}

std::int64_t RecordReader::integer(const std::string& field) {
  const Json& v = require(field);
  if (!v.is_number_integer()) {
    throw IngestionError(line_, field, "expected an integer");
  }
  return v.get<std::int64_t>();
}

void RecordReader::finish() const {
  for (const auto& [key, value] : record_.items()) {
    if (!seen_.contains(key)) throw IngestionError(line_, key, "unknown field");
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace affeval
