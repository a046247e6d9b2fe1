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

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "specrelax/kernels.hpp"

namespace specrelax::kernels {
namespace {

std::vector<Backend> available() {
  std::vector<Backend> out;
  for (Backend b : {Backend::kScalar, Backend::kAvx2, Backend::kNeon}) {
    if (supported(b)) out.push_back(b);
  }
  return out;
}

std::vector<double> random_vec(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

// Accumulation order differs between variants, so reductions agree to a
// relative bound rather than bit for bit.
void expect_close(double a, double b, double scale) {
  EXPECT_NEAR(a, b, 1e-13 * std::max(1.0, scale));
}

TEST(Kernels, ScalarAlwaysSupported) {
  EXPECT_TRUE(supported(Backend::kScalar));
  EXPECT_EQ(table(Backend::kScalar).backend, Backend::kScalar);
}

TEST(Kernels, ParseRoundTrip) {
  for (Backend b : {Backend::kScalar, Backend::kAvx2, Backend::kNeon}) {
    EXPECT_EQ(parse_backend(to_string(b)), b);
  }
  EXPECT_FALSE(parse_backend("sse9").has_value());
}

TEST(Kernels, UnsupportedBackendIsRejected) {
  for (Backend b : {Backend::kAvx2, Backend::kNeon}) {
    if (supported(b)) continue;
    EXPECT_THROW(table(b), std::invalid_argument);
    const Backend before = active().backend;
    EXPECT_FALSE(set_backend(b));
    EXPECT_EQ(active().backend, before);
  }
}

TEST(Kernels, VariantsMatchScalarReference) {
  std::mt19937_64 gen(7);
  const KernelTable& ref = table(Backend::kScalar);
  for (Backend b : available()) {
    const KernelTable& k = table(b);
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 67u, 1000u}) {
      SCOPED_TRACE(std::string(to_string(b)) + " n=" + std::to_string(n));
      const auto a = random_vec(gen, n);
      const auto c = random_vec(gen, n);
      double mag = 0.0;
      for (std::size_t i = 0; i < n; ++i) mag += std::fabs(a[i]) * std::fabs(c[i]) + std::fabs(a[i]);

      expect_close(k.dot(a.data(), c.data(), n), ref.dot(a.data(), c.data(), n), mag);
      expect_close(k.sum(a.data(), n), ref.sum(a.data(), n), mag);
      expect_close(k.sum_abs_diff(a.data(), c.data(), n), ref.sum_abs_diff(a.data(), c.data(), n),
                   4.0 * mag + 4.0 * n);

      std::vector<double> out_k(n), out_r(n);
      const double tk = k.positive_diff(a.data(), c.data(), out_k.data(), n);
      const double tr = ref.positive_diff(a.data(), c.data(), out_r.data(), n);
      EXPECT_EQ(out_k, out_r);  // elementwise: exact
      expect_close(tk, tr, 4.0 * n);

      auto yk = c;
      auto yr = c;
      k.axpy(0.37, a.data(), yk.data(), n);
      ref.axpy(0.37, a.data(), yr.data(), n);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(yk[i], yr[i], 1e-15 * 4.0);

      auto sk = a;
      auto sr = a;
      k.scale(-1.5, sk.data(), n);
      ref.scale(-1.5, sr.data(), n);
      EXPECT_EQ(sk, sr);
    }
  }
}

TEST(Kernels, PositiveDiffClampsAtZero) {
  for (Backend b : available()) {
    const std::vector<double> a{0.5, 0.3, 0.2, 0.0, 1.0};
    const std::vector<double> c{0.2, 0.5, 0.3, 0.0, 0.25};
    std::vector<double> out(a.size());
    const double total = table(b).positive_diff(a.data(), c.data(), out.data(), a.size());
    EXPECT_NEAR(out[0], 0.3, 1e-15);
    EXPECT_EQ(out[1], 0.0);
    EXPECT_EQ(out[2], 0.0);
    EXPECT_EQ(out[3], 0.0);
    EXPECT_EQ(out[4], 0.75);
    EXPECT_NEAR(total, 1.05, 1e-15);
  }
}

TEST(Kernels, SetBackendSwitchesActiveTable) {
  const Backend before = active().backend;
  for (Backend b : available()) {
    ASSERT_TRUE(set_backend(b));
    EXPECT_EQ(active().backend, b);
    const std::vector<double> a{1, 2, 3, 4, 5};
    EXPECT_DOUBLE_EQ(dot(a, a), 55.0);
  }
  set_backend(before);
}

}  // namespace
}  // namespace specrelax::kernels
