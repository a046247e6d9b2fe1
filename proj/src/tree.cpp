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

#include "specrelax/tree.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

namespace specrelax {

std::size_t TreeMask::max_width() const {
  return widths.empty() ? 0 : *std::max_element(widths.begin(), widths.end());
}

std::size_t TreeMask::node_count() const {
  std::size_t total = 0;
  std::size_t level = 1;
  for (std::size_t w : widths) {
    level *= w;
    total += level;
  }
  return total;
}

void TreeMask::validate(std::size_t cap) const {
  if (widths.empty()) fail(ErrorKind::kInvalidArgument, "tree mask needs at least one level");
  std::size_t total = 0;
  std::size_t level = 1;
  for (std::size_t w : widths) {
    if (w == 0) fail(ErrorKind::kInvalidArgument, "tree widths must be >= 1");
    level *= w;
    total += level;
    if (level > cap || total > cap) {
      fail(ErrorKind::kInvalidArgument,
           "tree mask exceeds node cap of " + std::to_string(cap));
    }
  }
}

TreeMask TreeMask::truncated(std::size_t depth) const {
  TreeMask out;
  out.widths.assign(widths.begin(), widths.begin() + static_cast<std::ptrdiff_t>(
                                                         std::min(depth, widths.size())));
  return out;
}

TreeMask TreeMask::parse(std::string_view text) {
  TreeMask mask;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto part = text.substr(0, comma);
    std::size_t w = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), w);
    if (ec != std::errc() || ptr != part.data() + part.size()) {
      fail(ErrorKind::kInvalidArgument, "bad tree width '" + std::string(part) + "'");
    }
    mask.widths.push_back(w);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  mask.validate();
  return mask;
}

TreeMask TreeMask::chain(std::size_t depth) { return TreeMask{std::vector<std::size_t>(depth, 1)}; }

std::string TreeMask::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(widths[i]);
  }
  return out;
}

TreeMask default_tree_mask() { return TreeMask{{4, 2, 2, 1, 1}}; }

std::string_view to_string(CandidateMode mode) {
  return mode == CandidateMode::kTopW ? "topw" : "sampled";
}

CandidateMode parse_candidate_mode(std::string_view text) {
  if (text == "topw") return CandidateMode::kTopW;
  if (text == "sampled") return CandidateMode::kSampled;
  fail(ErrorKind::kInvalidArgument, "candidate mode must be topw or sampled");
}

std::vector<TokenId> DraftTree::path_tokens(int node) const {
  std::vector<TokenId> out;
  for (int n = node; n != kRootSlot; n = nodes[static_cast<std::size_t>(n)].parent) {
    out.push_back(nodes[static_cast<std::size_t>(n)].token);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<TokenId> DraftTree::context_of(int slot) const {
  std::vector<TokenId> out = prefix;
  if (slot != kRootSlot) {
    const auto path = path_tokens(slot);
    out.insert(out.end(), path.begin(), path.end());
  }
  return out;
}

namespace {

// Indices of the chosen candidates, in candidate order.
std::vector<TokenId> choose_candidates(const ProbDist& p, std::size_t width,
                                       CandidateMode mode, RngStream& rng) {
  std::vector<TokenId> chosen;
  if (mode == CandidateMode::kTopW) {
    std::vector<TokenId> order(p.size());
    std::iota(order.begin(), order.end(), TokenId{0});
    // Stable: ties go to the lower token id.
    std::stable_sort(order.begin(), order.end(),
                     [&](TokenId a, TokenId b) { return p[a] > p[b]; });
    for (TokenId t : order) {
      if (chosen.size() == width || p[t] <= 0.0) break;
      chosen.push_back(t);
    }
    return chosen;
  }
  std::vector<double> remaining(p.mass().begin(), p.mass().end());
  while (chosen.size() < width) {
    double total = 0.0;
    for (double m : remaining) total += m;
    if (total <= 0.0) break;
    const double u = rng.uniform() * total;
    double cumulative = 0.0;
    std::size_t pick = remaining.size();
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      if (remaining[i] <= 0.0) continue;
      pick = i;
      cumulative += remaining[i];
      if (u < cumulative) break;
    }
    chosen.push_back(static_cast<TokenId>(pick));
    remaining[pick] = 0.0;
  }
  return chosen;
}

}  // namespace

DraftTree sample_draft_tree(const Drafter& drafter, std::span<const TokenId> prefix,
                            GridPos start_pos, int grid_side, const TreeMask& mask,
                            RngStream& rng, CandidateMode mode) {
  mask.validate();
  if (grid_side <= 0) fail(ErrorKind::kInvalidArgument, "grid side must be positive");
  const std::size_t vocab = drafter.vocab_size();
  for (std::size_t w : mask.widths) {
    if (w > vocab) {
      fail(ErrorKind::kVocabExhausted,
           "tree width " + std::to_string(w) + " exceeds vocabulary " + std::to_string(vocab));
    }
  }

  DraftTree tree;
  tree.prefix.assign(prefix.begin(), prefix.end());
  tree.start_pos = start_pos;
  tree.grid_side = grid_side;
  const std::size_t start = start_pos.flatten(grid_side);

  std::vector<int> frontier{kRootSlot};
  for (std::size_t level = 1; level <= mask.depth(); ++level) {
    const GridPos pos = position_of(start + level - 1, grid_side);
    std::vector<int> next;
    for (int parent : frontier) {
      const auto context = tree.context_of(parent);
      ProbDist p = drafter.eval(context, pos);
      const auto picks = choose_candidates(p, mask.widths[level - 1], mode, rng);
      for (TokenId t : picks) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(DraftNode{t, p[t], parent, level, {}});
        tree.node_draft.emplace_back();
        if (parent == kRootSlot) {
          tree.root_children.push_back(id);
        } else {
          tree.nodes[static_cast<std::size_t>(parent)].children.push_back(id);
        }
        next.push_back(id);
      }
      if (parent == kRootSlot) {
        tree.root_draft = std::move(p);
      } else {
        tree.node_draft[static_cast<std::size_t>(parent)] = std::move(p);
      }
    }
    if (next.empty()) break;
    tree.levels.push_back(next);
    frontier = std::move(next);
  }
  return tree;
}

std::vector<TokenId> flatten_accepted_path(const DraftTree& tree, std::span<const int> path) {
  int expected_parent = kRootSlot;
  for (int n : path) {
    if (n < 0 || static_cast<std::size_t>(n) >= tree.nodes.size() ||
        tree.nodes[static_cast<std::size_t>(n)].parent != expected_parent) {
      fail(ErrorKind::kNotAPath, "accepted nodes are not a root-to-node path");
    }
    expected_parent = n;
  }
  std::vector<TokenId> out = tree.prefix;
  for (int n : path) out.push_back(tree.nodes[static_cast<std::size_t>(n)].token);
  return out;
}

}  // namespace specrelax
