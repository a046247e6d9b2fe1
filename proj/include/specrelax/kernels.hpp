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

#pragma once

// Data-parallel arithmetic used by the probability, feature and training
// code. Each kernel has a scalar reference implementation plus optional
// AVX2 (x86-64) and NEON (aarch64) variants; the active table is chosen at
// startup from the host CPU and may be pinned with SPECRELAX_KERNELS or
// set_backend().

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace specrelax::kernels {

enum class Backend { kScalar, kAvx2, kNeon };

struct KernelTable {
  Backend backend;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*sum_abs_diff)(const double* a, const double* b, std::size_t n);
  // out[i] = max(a[i] - b[i], 0); returns the sum of out.
  double (*positive_diff)(const double* a, const double* b, double* out,
                          std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
};

std::string_view to_string(Backend backend);
std::optional<Backend> parse_backend(std::string_view name);

// True when the variant was compiled in and the CPU can run it.
bool supported(Backend backend);
// Throws std::invalid_argument for unsupported backends.
const KernelTable& table(Backend backend);

const KernelTable& active();
// Returns false (and leaves the active table unchanged) if unsupported.
bool set_backend(Backend backend);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double sum(std::span<const double> a) {
  return active().sum(a.data(), a.size());
}
inline double sum_abs_diff(std::span<const double> a,
                           std::span<const double> b) {
  return active().sum_abs_diff(a.data(), b.data(), a.size());
}
inline double positive_diff(std::span<const double> a,
                            std::span<const double> b, std::span<double> out) {
  return active().positive_diff(a.data(), b.data(), out.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void scale(double alpha, std::span<double> x) {
  active().scale(alpha, x.data(), x.size());
}

}  // namespace specrelax::kernels
