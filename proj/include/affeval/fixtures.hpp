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

// Seeded synthetic corpora for offline runs and tests.
//
// Choice corpora are label-balanced (counts differ by at most one). Token
// corpora use words unique across the corpus, so an exact reply always
// aligns back to the gold tags. Scalar corpora have pairwise distinct scores
// inside the task's score range.

#include <cstdint>

#include "affeval/corpus.hpp"

namespace affeval {

Corpus synth_corpus(const TaskSpec& spec, std::size_t n, std::uint64_t seed);

// Ids are "<prefix>-<index>" zero-padded to six digits.
std::string synth_id(std::string_view prefix, std::size_t index);

}  // namespace affeval
