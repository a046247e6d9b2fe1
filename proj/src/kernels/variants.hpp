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

#include <cstddef>

#include "specrelax/kernels.hpp"

namespace specrelax::kernels {

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sum_abs_diff(const double* a, const double* b, std::size_t n);
double positive_diff(const double* a, const double* b, double* out,
                     std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
}  // namespace scalar

#if defined(SPECRELAX_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sum_abs_diff(const double* a, const double* b, std::size_t n);
double positive_diff(const double* a, const double* b, double* out,
                     std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
}  // namespace avx2
#endif

#if defined(SPECRELAX_HAVE_NEON)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sum_abs_diff(const double* a, const double* b, std::size_t n);
double positive_diff(const double* a, const double* b, double* out,
                     std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
}  // namespace neon
#endif

}  // namespace specrelax::kernels
