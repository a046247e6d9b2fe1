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

// Shared fixtures for the unit tests.

#include <memory>
#include <vector>

#include "specrelax/model.hpp"

namespace specrelax::testing {

// V=2 order-1 table from explicit rows; features are fixed distinct vectors.
inline TabularModelSpec two_token_spec(std::vector<double> after_start, std::vector<double> after0,
                                       std::vector<double> after1) {
  TabularModelSpec s;
  s.vocab = 2;
  s.order = 1;
  s.feature_dim = 2;
  s.table = {{{kStartToken}, std::move(after_start)}, {{0}, std::move(after0)}, {{1}, std::move(after1)}};
  s.feature_table = {{{kStartToken}, {1.0, 0.0}}, {{0}, {0.6, 0.8}}, {{1}, {0.0, 1.0}}};
  return s;
}

// Grid world with V=8, two clusters of four, one region per half of the grid.
inline GridWorldSpec small_gridworld() {
  GridWorldSpec s;
  s.grid_side = 4;
  s.vocab = 8;
  s.feature_dim = 4;
  s.clusters = {0, 0, 0, 0, 1, 1, 1, 1};
  s.regions.assign(16, 0);
  for (std::size_t i = 8; i < 16; ++i) s.regions[i] = 1;
  s.preferred_cluster = {0, 1};
  s.region_anchors = {{1, 0, 0, 0}, {0, 1, 0, 0}};
  s.cluster_anchors = {{0, 0, 1, 0}, {0, 0, 0, 1}};
  s.in_cluster_mass = 0.8;
  s.feature_mix = 0.2;
  return s;
}

// Drafter with a fixed distribution regardless of context.
class ConstantDrafter final : public Drafter {
 public:
  explicit ConstantDrafter(ProbDist p) : p_(std::move(p)) {}
  std::size_t vocab_size() const override { return p_.size(); }
  ProbDist eval(std::span<const TokenId>, GridPos) const override { return p_; }

 private:
  ProbDist p_;
};

// Target with a fixed distribution and a feature that depends only on the
// last token: features[last] (or `start_feature` for an empty prefix).
class ConstantTarget final : public TargetModel {
 public:
  ConstantTarget(ProbDist q, std::vector<FeatureVec> features, FeatureVec start_feature,
                 int side = 8)
      : q_(std::move(q)), features_(std::move(features)), start_(std::move(start_feature)),
        side_(side) {}
  std::size_t vocab_size() const override { return q_.size(); }
  std::size_t feature_dim() const override { return start_.size(); }
  int grid_side() const override { return side_; }
  TargetEval eval(std::span<const TokenId> prefix, GridPos) const override {
    return {q_, prefix.empty() ? start_ : features_[prefix.back()]};
  }

 private:
  ProbDist q_;
  std::vector<FeatureVec> features_;
  FeatureVec start_;
  int side_;
};

}  // namespace specrelax::testing
