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

// Compiled with -mavx2. Only reached after a runtime CPU check.

#include <immintrin.h>

#include <array>

#include "affeval/kernels.hpp"

namespace affeval::kernels::detail {

namespace {

inline __m256i fmix32_x8(__m256i h) {
  h = _mm256_xor_si256(h, _mm256_srli_epi32(h, 16));
  h = _mm256_mullo_epi32(h, _mm256_set1_epi32(static_cast<int>(0x85EBCA6BU)));
  h = _mm256_xor_si256(h, _mm256_srli_epi32(h, 13));
  h = _mm256_mullo_epi32(h, _mm256_set1_epi32(static_cast<int>(0xC2B2AE35U)));
  h = _mm256_xor_si256(h, _mm256_srli_epi32(h, 16));
  return h;
}

}  // namespace

void sign_flip_sums_avx2(const SignFlipInput& input, std::uint64_t first,
                         std::span<double> out) {
  const std::size_t n = input.diffs.size();
  const double* diffs = input.diffs.data();
  const auto* key_lo = reinterpret_cast<const __m256i*>(input.key_lo.data());
  const auto* key_hi = reinterpret_cast<const __m256i*>(input.key_hi.data());
  const __m256i sign_bit = _mm256_set1_epi64x(static_cast<long long>(0x8000000000000000ULL));

  for (std::size_t t = 0; t < out.size(); ++t) {
    const __m256i salt =
        _mm256_set1_epi32(static_cast<int>(iteration_salt(input.seed, first + t)));
    __m256d acc_lo = _mm256_setzero_pd();  // lanes 0..3
    __m256d acc_hi = _mm256_setzero_pd();  // lanes 4..7
    for (std::size_t block = 0; block < n / kLanes; ++block) {
      __m256i h = _mm256_xor_si256(_mm256_loadu_si256(key_lo + block), salt);
      h = fmix32_x8(h);
      h = _mm256_xor_si256(h, _mm256_loadu_si256(key_hi + block));
      h = fmix32_x8(h);
      // Sign-extending each 32-bit hash moves its top bit to bit 63.
      const __m256i m_lo = _mm256_and_si256(
          _mm256_cvtepi32_epi64(_mm256_castsi256_si128(h)), sign_bit);
      const __m256i m_hi = _mm256_and_si256(
          _mm256_cvtepi32_epi64(_mm256_extracti128_si256(h, 1)), sign_bit);
      const __m256d d_lo = _mm256_loadu_pd(diffs + block * kLanes);
      const __m256d d_hi = _mm256_loadu_pd(diffs + block * kLanes + 4);
      acc_lo = _mm256_add_pd(acc_lo, _mm256_xor_pd(d_lo, _mm256_castsi256_pd(m_lo)));
      acc_hi = _mm256_add_pd(acc_hi, _mm256_xor_pd(d_hi, _mm256_castsi256_pd(m_hi)));
    }
    alignas(32) std::array<double, 4> s;
    _mm256_store_pd(s.data(), _mm256_add_pd(acc_lo, acc_hi));
    out[t] = (s[0] + s[1]) + (s[2] + s[3]);
  }
}

}  // namespace affeval::kernels::detail
