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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "specrelax/core.hpp"
#include "specrelax/model.hpp"
#include "specrelax/rng.hpp"

namespace specrelax {

inline constexpr std::size_t kDefaultTreeNodeCap = 256;

// Static speculation topology: widths[l] candidates per node at level l + 1.
struct TreeMask {
  std::vector<std::size_t> widths;

  std::size_t depth() const noexcept { return widths.size(); }
  std::size_t max_width() const;
  // Sum over levels of the product of widths up to that level.
  std::size_t node_count() const;

  // Throws kInvalidArgument for empty masks, zero widths or more than `cap` nodes.
  void validate(std::size_t cap = kDefaultTreeNodeCap) const;
  // Keeps the first `depth` levels.
  TreeMask truncated(std::size_t depth) const;

  // Parses "4,2,2,1,1".
  static TreeMask parse(std::string_view text);
  static TreeMask chain(std::size_t depth);
  std::string to_string() const;

  bool operator==(const TreeMask&) const = default;
};

// Default mask: [4,2,2,1,1] (4 + 8 + 16 + 16 + 16 = 60 nodes).
TreeMask default_tree_mask();

enum class CandidateMode {
  // Top-w tokens by drafter probability, in descending order.
  kTopW,
  // w distinct tokens drawn sequentially without replacement from the
  // drafter distribution, in draw order.
  kSampled,
};

std::string_view to_string(CandidateMode mode);
CandidateMode parse_candidate_mode(std::string_view text);

inline constexpr int kRootSlot = -1;

struct DraftNode {
  TokenId token = 0;
  double drafter_prob = 0.0;  // p(token | path to parent)
  int parent = kRootSlot;     // node index, or kRootSlot for level 1
  std::size_t level = 1;      // 1-based
  std::vector<int> children;  // in candidate order
};

struct DraftTree {
  std::vector<TokenId> prefix;
  GridPos start_pos;
  int grid_side = 0;
  std::vector<DraftNode> nodes;
  std::vector<std::vector<int>> levels;  // levels[l - 1] = node indices
  std::vector<int> root_children;
  ProbDist root_draft;                   // drafter distribution for level 1
  std::vector<ProbDist> node_draft;      // per node; empty for leaves

  std::size_t depth() const noexcept { return levels.size(); }
  std::size_t start_index() const { return prefix.size(); }
  const std::vector<int>& children_of(int slot) const {
    return slot == kRootSlot ? root_children : nodes[static_cast<std::size_t>(slot)].children;
  }
  const ProbDist& draft_dist_of(int slot) const {
    return slot == kRootSlot ? root_draft : node_draft[static_cast<std::size_t>(slot)];
  }
  // Draft tokens from level 1 down to `node`.
  std::vector<TokenId> path_tokens(int node) const;
  // prefix ++ path_tokens(node).
  std::vector<TokenId> context_of(int slot) const;
};

// Expands the tree level by level from the drafter. Candidates with zero
// drafter probability are never added, so levels may hold fewer nodes than
// the mask allows. Throws kVocabExhausted if any width exceeds the vocabulary.
// The rng is only consumed in kSampled mode.
DraftTree sample_draft_tree(const Drafter& drafter, std::span<const TokenId> prefix,
                            GridPos start_pos, int grid_side, const TreeMask& mask,
                            RngStream& rng, CandidateMode mode = CandidateMode::kTopW);

// prefix ++ tokens of `path`. Throws kNotAPath unless `path` starts at level 1
// and each node is the parent of the next.
std::vector<TokenId> flatten_accepted_path(const DraftTree& tree, std::span<const int> path);

}  // namespace specrelax
