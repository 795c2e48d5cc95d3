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

#include <array>

#include "affeval/kernels.hpp"

namespace affeval::kernels {

namespace {

double reduce_lanes(const std::array<double, kLanes>& acc) {
  const double s0 = acc[0] + acc[4];
  const double s1 = acc[1] + acc[5];
  const double s2 = acc[2] + acc[6];
  const double s3 = acc[3] + acc[7];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace

double lane_ordered_sum(std::span<const double> values) {
  std::array<double, kLanes> acc{};
  for (std::size_t i = 0; i < values.size(); ++i) acc[i % kLanes] += values[i];
  return reduce_lanes(acc);
}

namespace detail {

void sign_flip_sums_scalar(const SignFlipInput& input, std::uint64_t first,
                           std::span<double> out) {
  const std::size_t n = input.diffs.size();
  for (std::size_t t = 0; t < out.size(); ++t) {
    const std::uint32_t salt = iteration_salt(input.seed, first + t);
    std::array<double, kLanes> acc{};
    for (std::size_t i = 0; i < n; ++i) {
      const double d = input.diffs[i];
      acc[i % kLanes] += flip_sign(input.key_lo[i], input.key_hi[i], salt) ? -d : d;
    }
    out[t] = reduce_lanes(acc);
  }
}

}  // namespace detail

}  // namespace affeval::kernels
