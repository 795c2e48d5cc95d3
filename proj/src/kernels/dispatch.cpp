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
#include <string>

#include "affeval/error.hpp"
#include "affeval/kernels.hpp"
#include "affeval/random.hpp"

namespace affeval::kernels {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(AFFEVAL_HAVE_AVX2_KERNEL) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") != 0;
#else
      return false;
#endif
  }
  return false;
}

Isa best_isa() {
  static const Isa isa = [] {
    const char* force = std::getenv("AFFEVAL_FORCE_SCALAR");
    if (force != nullptr && std::string(force) == "1") return Isa::kScalar;
    return isa_available(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
  }();
  return isa;
}

std::uint32_t iteration_salt(std::uint64_t seed, std::uint64_t iteration) {
  return static_cast<std::uint32_t>(derive_seed(seed, iteration) >> 32);
}

void sign_flip_sums(const SignFlipInput& input, std::uint64_t first,
                    std::span<double> out, Isa isa) {
  const std::size_t n = input.diffs.size();
  if (n % kLanes != 0 || input.key_lo.size() != n || input.key_hi.size() != n) {
    throw InvalidArgument("sign-flip input must be padded to a multiple of 8");
  }
  if (!isa_available(isa)) {
    throw InvalidArgument("kernel ISA " + std::string(to_string(isa)) +
                          " is not available on this CPU");
  }
  switch (isa) {
    case Isa::kScalar:
      detail::sign_flip_sums_scalar(input, first, out);
      return;
    case Isa::kAvx2:
#if defined(AFFEVAL_HAVE_AVX2_KERNEL)
      detail::sign_flip_sums_avx2(input, first, out);
      return;
#else
      break;
#endif
  }
  throw InvalidArgument("unsupported kernel ISA");
}

}  // namespace affeval::kernels
