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

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "affeval/corpus.hpp"
#include "affeval/random.hpp"

namespace affeval::testing {

inline const std::vector<TaskSpec>& catalog() {
  static const std::vector<TaskSpec> specs =
      load_task_specs(std::filesystem::path(AFFEVAL_SOURCE_DIR) / "tasks" / "catalog.json");
  return specs;
}

inline const TaskSpec& task(std::string_view id) { return find_task(catalog(), id); }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(std::string_view tag) {
    static std::uint64_t counter = 0;
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("affeval-" + std::string(tag) + "-" +
             std::to_string(fnv1a64(std::to_string(stamp) + ":" + std::to_string(counter++)) %
                            1000000000));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view sub) const { return path_ / sub; }

 private:
  std::filesystem::path path_;
};

}  // namespace affeval::testing
