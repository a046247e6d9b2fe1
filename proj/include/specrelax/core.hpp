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
#include <cstdint>
#include <span>
#include <vector>

#include "specrelax/error.hpp"

namespace specrelax {

using TokenId = std::uint32_t;

// Absolute tolerance used for every probability comparison in the library.
inline constexpr double kProbTolerance = 1e-9;
// Norms at or below this are rejected by cosine_sim.
inline constexpr double kMinFeatureNorm = 1e-12;

// Normalized probability mass over a finite vocabulary.
class ProbDist {
 public:
  ProbDist() = default;

  // Validates non-negativity, finiteness and unit sum (within kProbTolerance).
  explicit ProbDist(std::vector<double> mass);

  static ProbDist uniform(std::size_t vocab);
  static ProbDist one_hot(std::size_t vocab, TokenId token);
  // Scales arbitrary non-negative weights to unit sum. Throws kInvalidArgument
  // when the total is zero.
  static ProbDist normalized(std::vector<double> weights);

  std::size_t size() const noexcept { return mass_.size(); }
  bool empty() const noexcept { return mass_.empty(); }
  double operator[](std::size_t i) const { return mass_[i]; }
  std::span<const double> mass() const noexcept { return mass_; }

  bool operator==(const ProbDist&) const = default;

 private:
  std::vector<double> mass_;
};

// Real-valued hidden state; entries must be finite.
class FeatureVec {
 public:
  FeatureVec() = default;
  explicit FeatureVec(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  double norm() const;

  bool operator==(const FeatureVec&) const = default;

 private:
  std::vector<double> values_;
};

struct GridPos {
  int row = 0;
  int col = 0;

  std::size_t flatten(int side) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(side) +
           static_cast<std::size_t>(col);
  }
  static GridPos from_index(std::size_t index, int side) {
    const auto n = static_cast<std::size_t>(side);
    return {static_cast<int>(index / n), static_cast<int>(index % n)};
  }

  bool operator==(const GridPos&) const = default;
};

// dot(a, b) / (|a| |b|), clamped to [-1, 1].
double cosine_sim(const FeatureVec& a, const FeatureVec& b);

// Half the L1 distance.
double tvd(const ProbDist& a, const ProbDist& b);

// Normalized positive part of (q - p). Throws kDegenerateResidual when the
// positive part has no mass.
ProbDist residual_dist(const ProbDist& q, const ProbDist& p);

// Inverse-CDF draw with u in [0, 1). Zero-mass entries are never returned.
TokenId sample_index(const ProbDist& dist, double u);

// KL(q || p) with p clamped away from zero.
double kl_divergence(const ProbDist& q, const ProbDist& p);

}  // namespace specrelax
