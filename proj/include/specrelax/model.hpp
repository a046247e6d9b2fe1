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

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "specrelax/core.hpp"

namespace specrelax {

// Target output for one prefix: next-token distribution and the hidden
// state that produced it.
struct TargetEval {
  ProbDist dist;
  FeatureVec feature;
};

class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual std::size_t feature_dim() const = 0;
  // Side length N of the position grid; sequences hold at most N*N tokens.
  virtual int grid_side() const = 0;
  // `pos` is the position of the token being predicted.
  virtual TargetEval eval(std::span<const TokenId> prefix, GridPos pos) const = 0;
};

class Drafter {
 public:
  virtual ~Drafter() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual ProbDist eval(std::span<const TokenId> prefix, GridPos pos) const = 0;
};

// ---------------------------------------------------------------------------
// Tabular order-k model

// A context window holds the last `order` tokens, oldest first; positions
// before the start of the sequence hold kStartToken.
inline constexpr std::int64_t kStartToken = -1;

struct TabularModelSpec {
  struct Row {
    std::vector<std::int64_t> window;
    std::vector<double> dist;
  };
  struct FeatureRow {
    std::vector<std::int64_t> window;
    std::vector<double> feature;
  };

  std::size_t vocab = 0;
  std::size_t order = 1;
  std::size_t feature_dim = 0;
  // Position bookkeeping only; the table ignores positions.
  int grid_side = 8;
  std::vector<Row> table;
  std::vector<FeatureRow> feature_table;
};

class TabularModel final : public TargetModel {
 public:
  // Throws kUnknownWindow when any reachable window is missing from either
  // table, so eval never has to.
  explicit TabularModel(TabularModelSpec spec);

  std::size_t vocab_size() const override { return spec_.vocab; }
  std::size_t feature_dim() const override { return spec_.feature_dim; }
  int grid_side() const override { return spec_.grid_side; }
  TargetEval eval(std::span<const TokenId> prefix, GridPos pos) const override;

  const TabularModelSpec& spec() const noexcept { return spec_; }

 private:
  std::size_t window_code(std::span<const TokenId> prefix) const;

  TabularModelSpec spec_;
  std::vector<ProbDist> rows_;       // by window code
  std::vector<FeatureVec> features_; // by window code
};

// Random order-k table: Dirichlet(1)-style rows and Gaussian features.
TabularModelSpec random_tabular_spec(std::size_t vocab, std::size_t order,
                                     std::size_t feature_dim, std::uint64_t seed,
                                     int grid_side = 8);

// ---------------------------------------------------------------------------
// Grid world: image-like target with token clusters and spatial regions

struct GridWorldSpec {
  int grid_side = 8;
  std::size_t vocab = 32;
  std::size_t feature_dim = 8;
  std::vector<std::size_t> clusters;        // token -> cluster id
  std::vector<std::size_t> regions;         // flattened cell -> region id
  std::vector<std::size_t> preferred_cluster;  // region -> cluster id
  std::vector<std::vector<double>> region_anchors;   // R unit vectors
  std::vector<std::vector<double>> cluster_anchors;  // K vectors
  double in_cluster_mass = 0.8;
  double feature_mix = 0.2;
  // Deterministic per-prefix perturbation magnitude, at most 0.05.
  double feature_jitter = 0.0;

  std::size_t num_clusters() const { return cluster_anchors.size(); }
  std::size_t num_regions() const { return region_anchors.size(); }
};

// N=8, V=32, K=4 clusters of 8, R=3 row bands (rows 0-2, 3-5, 6-7), h=8.
// Region anchors are basis vectors e0..e2, cluster anchors e3..e6.
GridWorldSpec default_gridworld_spec();

class GridWorldModel final : public TargetModel {
 public:
  explicit GridWorldModel(GridWorldSpec spec);

  std::size_t vocab_size() const override { return spec_.vocab; }
  std::size_t feature_dim() const override { return spec_.feature_dim; }
  int grid_side() const override { return spec_.grid_side; }
  TargetEval eval(std::span<const TokenId> prefix, GridPos pos) const override;

  const GridWorldSpec& spec() const noexcept { return spec_; }
  std::size_t region_of(GridPos pos) const;
  // Next-token distribution for a cell, independent of the prefix.
  const ProbDist& region_dist(std::size_t region) const { return region_dists_[region]; }

 private:
  GridWorldSpec spec_;
  std::vector<ProbDist> region_dists_;
};

// ---------------------------------------------------------------------------
// Linear softmax drafter over (last token, row, col) one-hot context

struct LinearDrafterSpec {
  std::size_t vocab = 0;
  int grid_side = 0;
  std::vector<double> weights;  // vocab x context_dim(), row-major
  std::vector<double> bias;     // vocab

  std::size_t context_dim() const {
    return vocab + 2 * static_cast<std::size_t>(grid_side);
  }
  static LinearDrafterSpec zeros(std::size_t vocab, int grid_side);
};

class LinearDrafter final : public Drafter {
 public:
  explicit LinearDrafter(LinearDrafterSpec spec);

  std::size_t vocab_size() const override { return spec_.vocab; }
  ProbDist eval(std::span<const TokenId> prefix, GridPos pos) const override;

  const LinearDrafterSpec& spec() const noexcept { return spec_; }

 private:
  LinearDrafterSpec spec_;
};

// Dense context: one-hot last token (all zero for an empty prefix), one-hot
// row, one-hot column. Rows/cols outside the drafter grid contribute nothing.
std::vector<double> drafter_context(std::size_t vocab, int grid_side,
                                    std::optional<TokenId> last_token,
                                    GridPos pos);

// Softmax of W * context + b.
ProbDist linear_drafter_dist(const LinearDrafterSpec& spec,
                             std::span<const double> context);

// Uses a target model's next-token distribution as the drafter (p == q).
class TargetDrafter final : public Drafter {
 public:
  explicit TargetDrafter(std::shared_ptr<const TargetModel> target)
      : target_(std::move(target)) {}

  std::size_t vocab_size() const override { return target_->vocab_size(); }
  ProbDist eval(std::span<const TokenId> prefix, GridPos pos) const override {
    return target_->eval(prefix, pos).dist;
  }

 private:
  std::shared_ptr<const TargetModel> target_;
};

// Drafter that has located each row band's preferred cluster but collapses
// onto its first few tokens: inside the cluster, the logit of the token with
// in-cluster rank j is log q - rank_decay * j, and every other token gets
// log q + off_cluster_boost. All weight lives in the row columns of W. Zero
// for both reproduces the target exactly on row-aligned region maps.
LinearDrafterSpec mode_seeking_drafter(const GridWorldSpec& grid, double rank_decay,
                                       double off_cluster_boost = 0.0);

// Settings of the default benchmark drafter.
inline constexpr double kDefaultRankDecay = 4.0;
inline constexpr double kDefaultOffClusterBoost = 1.0;

// ---------------------------------------------------------------------------

struct SequenceDistribution {
  std::size_t vocab = 0;
  std::size_t length = 0;
  std::vector<double> prob;  // indexed by base-V code, first token most significant

  std::size_t code(std::span<const TokenId> seq) const;
  double operator()(std::span<const TokenId> seq) const { return prob[code(seq)]; }
};

// Exact chain-rule distribution over all length-L sequences. Throws
// kTooLarge when V^L exceeds 1e6.
SequenceDistribution enumerate_ar_distribution(const TargetModel& model,
                                               std::size_t length);

// Position of sequence index `index`, clamped to the last grid cell.
GridPos position_of(std::size_t index, int grid_side);

}  // namespace specrelax
