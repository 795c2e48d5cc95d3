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

// Sign-flip permutation kernels.
//
// For iteration t and element i the sign s(t, i) is derived from a per-element
// 64-bit key and a per-iteration salt, so the draw belongs to the element
// rather than its position. Kernels compute
//
//   out[t] = sum_i s(first + t, i) * diffs[i]
//
// with a fixed reduction order: kLanes interleaved accumulators (element i
// goes to lane i % kLanes), then acc[j] + acc[j + 4] for j < 4, then
// (s0 + s1) + (s2 + s3). The scalar kernel is the reference; every ISA
// variant reproduces it bit for bit.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace affeval::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view to_string(Isa isa);
bool isa_available(Isa isa);
// Widest available ISA; AFFEVAL_FORCE_SCALAR=1 in the environment pins scalar.
Isa best_isa();

inline constexpr std::size_t kLanes = 8;

constexpr std::uint32_t fmix32(std::uint32_t h) {
  h ^= h >> 16;
  h *= 0x85EBCA6BU;
  h ^= h >> 13;
  h *= 0xC2B2AE35U;
  h ^= h >> 16;
  return h;
}

constexpr bool flip_sign(std::uint32_t key_lo, std::uint32_t key_hi,
                         std::uint32_t salt) {
  return (fmix32(fmix32(key_lo ^ salt) ^ key_hi) >> 31) != 0;
}

std::uint32_t iteration_salt(std::uint64_t seed, std::uint64_t iteration);

// All spans have the same length, a multiple of kLanes. Padding elements
// must have diff 0.
struct SignFlipInput {
  std::span<const double> diffs;
  std::span<const std::uint32_t> key_lo;
  std::span<const std::uint32_t> key_hi;
  std::uint64_t seed = 0;
};

// Writes out.size() sums for iterations first, first + 1, ...
void sign_flip_sums(const SignFlipInput& input, std::uint64_t first,
                    std::span<double> out, Isa isa);

// Unflipped sum in the kernels' reduction order.
double lane_ordered_sum(std::span<const double> values);

namespace detail {
void sign_flip_sums_scalar(const SignFlipInput& input, std::uint64_t first,
                           std::span<double> out);
#if defined(AFFEVAL_HAVE_AVX2_KERNEL)
void sign_flip_sums_avx2(const SignFlipInput& input, std::uint64_t first,
                         std::span<double> out);
#endif
}  // namespace detail

}  // namespace affeval::kernels
