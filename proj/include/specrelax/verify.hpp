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

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "specrelax/core.hpp"
#include "specrelax/model.hpp"
#include "specrelax/rng.hpp"
#include "specrelax/tree.hpp"

namespace specrelax {

enum class SiblingMode {
  // Every sibling is tested independently against min(1, q^R / p) with the
  // level's unmodified q and p. Biased across multi-candidate levels.
  kLiteral,
  // After each rejected sibling, q becomes norm([q - p]+) and the sibling is
  // removed from p (recursive rejection sampling). Distribution-preserving
  // with sampled candidates and relaxation off.
  kResidualAdjusted,
};

std::string_view to_string(SiblingMode mode);
SiblingMode parse_sibling_mode(std::string_view text);

struct RelaxConfig {
  double tau_pos = 0.85;
  double tau_seq = 0.5;
  double delta = 0.5;  // per-call TVD budget
  bool enable_interchange = true;
  bool enable_convergence = true;
  SiblingMode sibling_mode = SiblingMode::kLiteral;

  // Thresholds in [0, 1.01], delta in [0, 1].
  void validate() const;
};

// Target evaluations for every slot of a draft tree, from one parallel pass.
// `root` conditions on the prefix (it scores level 1); nodes[i] conditions on
// the path through node i (it scores node i's children and carries F_i).
struct TreeEvals {
  TargetEval root;
  std::vector<TargetEval> nodes;

  const TargetEval& of(int slot) const {
    return slot == kRootSlot ? root : nodes[static_cast<std::size_t>(slot)];
  }
};

TreeEvals evaluate_tree(const TargetModel& target, const DraftTree& tree);

struct SimilaritySets {
  // inter[l - 1]: sibling pairs (a, b), a < b, at level l with cos >= tau_pos.
  std::vector<std::vector<std::pair<int, int>>> inter;
  // conv[l - 1]: (a at level l, child b at level l + 1) with cos >= tau_seq.
  std::vector<std::vector<std::pair<int, int>>> conv;
  // Per-node adjacency derived from the pair lists.
  std::vector<std::vector<int>> partners;
  std::vector<std::vector<int>> convergent_children;
};

SimilaritySets build_sets(const DraftTree& tree, const TreeEvals& evals, const RelaxConfig& cfg);

// q with `added_mass` moved onto `boosted` from the donor tokens.
struct RelaxedDist {
  ProbDist base_q;
  TokenId boosted = 0;
  double added_mass = 0.0;
  // Tokens whose full q-mass was transferred; empty for mass-only relaxation.
  std::vector<TokenId> donors;

  // q^R(boosted), capped at 1.
  double boosted_prob() const;
  // The full relaxed distribution. Requires donors accounting for added_mass.
  ProbDist materialize() const;
};

struct RelaxResult {
  RelaxedDist dist;
  double consumed = 0.0;
  double added_interchange = 0.0;
  double added_convergence = 0.0;
};

// Adds the interchange mass if it fits the remaining budget, then the
// convergence mass if what is left still fits. Each set is all-or-nothing.
RelaxResult relax_q(const ProbDist& q, TokenId candidate, double set_mass_interchange,
                    double set_mass_convergence, double budget_left);

// Token-level form: masses are taken from q over distinct donor tokens,
// excluding the candidate itself and, for the convergence set, tokens already
// donated by the interchange set. The result's transfer TVD equals its
// added mass.
RelaxResult relax_q(const ProbDist& q, TokenId candidate,
                    std::span<const TokenId> interchange_tokens,
                    std::span<const TokenId> convergence_tokens, double budget_left);

struct TraceRecord {
  std::size_t level = 0;
  std::size_t sibling = 0;
  TokenId token = 0;
  double q = 0.0;          // target probability before relaxation
  double q_relaxed = 0.0;  // value used in the acceptance test
  double p = 0.0;
  double added_interchange = 0.0;
  double added_convergence = 0.0;
  double r = 0.0;
  bool accepted = false;
  double budget_left = 0.0;  // after this decision's relaxation
};

struct VerifyOutcome {
  std::vector<TokenId> accepted_tokens;
  std::vector<int> accepted_nodes;
  std::optional<TokenId> correction;
  std::size_t alpha = 0;
  double tvd_consumed = 0.0;
  std::vector<TraceRecord> trace;
  std::vector<RelaxedDist> relaxations;
};

// Standard speculative acceptance: r < min(1, q / p), residual correction on
// rejection. Draws one r per tested candidate and one for the correction.
VerifyOutcome verify_vanilla(const DraftTree& tree, const TreeEvals& evals, RngStream& rng,
                             SiblingMode sibling_mode = SiblingMode::kLiteral);

// Relaxed acceptance against q^R under a budget of cfg.delta per call. The
// rng draw pattern matches verify_vanilla, so disabled relaxation replays
// vanilla decisions exactly.
VerifyOutcome verify_cascade(const DraftTree& tree, const TreeEvals& evals,
                             const RelaxConfig& cfg, RngStream& rng);

// Probability that a speculative step emits each token when the draft is
// drawn from p: p(x) min(1, q(x)/p(x)) + P(reject) * residual(q, p)(x).
// Returned unnormalized so callers can check it against q directly.
std::vector<double> speculative_emission(const ProbDist& q, const ProbDist& p);

// min(1, q / p) with p > 0.
double acceptance_probability(double q, double p);

}  // namespace specrelax
