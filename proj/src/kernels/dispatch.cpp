// Copyright 2026 The specrelax Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "variants.hpp"

namespace specrelax::kernels {

namespace {

constexpr KernelTable kScalarTable{Backend::kScalar,     scalar::dot,
                                   scalar::sum,          scalar::sum_abs_diff,
                                   scalar::positive_diff, scalar::axpy,
                                   scalar::scale};

#if defined(SPECRELAX_HAVE_AVX2)
constexpr KernelTable kAvx2Table{Backend::kAvx2,       avx2::dot,
                                 avx2::sum,            avx2::sum_abs_diff,
                                 avx2::positive_diff,  avx2::axpy,
                                 avx2::scale};
#endif

#if defined(SPECRELAX_HAVE_NEON)
constexpr KernelTable kNeonTable{Backend::kNeon,      neon::dot,
                                 neon::sum,           neon::sum_abs_diff,
                                 neon::positive_diff, neon::axpy,
                                 neon::scale};
#endif

bool cpu_has_avx2() {
#if defined(SPECRELAX_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend best_backend() {
  if (const char* forced = std::getenv("SPECRELAX_KERNELS")) {
    if (auto b = parse_backend(forced); b && supported(*b)) return *b;
  }
  if (supported(Backend::kAvx2)) return Backend::kAvx2;
  if (supported(Backend::kNeon)) return Backend::kNeon;
  return Backend::kScalar;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&table(best_backend())};
  return slot;
}

}  // namespace

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::kScalar: return "scalar";
    case Backend::kAvx2: return "avx2";
    case Backend::kNeon: return "neon";
  }
  return "unknown";
}

std::optional<Backend> parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::kScalar;
  if (name == "avx2") return Backend::kAvx2;
  if (name == "neon") return Backend::kNeon;
  return std::nullopt;
}

bool supported(Backend backend) {
  switch (backend) {
    case Backend::kScalar: return true;
    case Backend::kAvx2: {
      static const bool ok = cpu_has_avx2();
      return ok;
    }
    case Backend::kNeon:
#if defined(SPECRELAX_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Backend backend) {
  if (!supported(backend)) {
    throw std::invalid_argument("kernel backend not available: " +
                                std::string(to_string(backend)));
  }
  switch (backend) {
#if defined(SPECRELAX_HAVE_AVX2)
    case Backend::kAvx2: return kAvx2Table;
#endif
#if defined(SPECRELAX_HAVE_NEON)
    case Backend::kNeon: return kNeonTable;
#endif
    default: return kScalarTable;
  }
}

const KernelTable& active() {
  return *active_slot().load(std::memory_order_acquire);
}

bool set_backend(Backend backend) {
  if (!supported(backend)) return false;
  active_slot().store(&table(backend), std::memory_order_release);
  return true;
}

}  // namespace specrelax::kernels
