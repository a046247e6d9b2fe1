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

#include "specrelax/verify.hpp"

#include <algorithm>
#include <cmath>

#include "specrelax/kernels.hpp"

namespace specrelax {

std::string_view to_string(SiblingMode mode) {
  return mode == SiblingMode::kLiteral ? "literal" : "residual-adjusted";
}

SiblingMode parse_sibling_mode(std::string_view text) {
  if (text == "literal") return SiblingMode::kLiteral;
  if (text == "residual-adjusted") return SiblingMode::kResidualAdjusted;
  fail(ErrorKind::kInvalidArgument, "sibling mode must be literal or residual-adjusted");
}

void RelaxConfig::validate() const {
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  if (!in(tau_pos, 0.0, 1.01)) fail(ErrorKind::kInvalidArgument, "tau_pos must lie in [0, 1.01]");
  if (!in(tau_seq, 0.0, 1.01)) fail(ErrorKind::kInvalidArgument, "tau_seq must lie in [0, 1.01]");
  if (!in(delta, 0.0, 1.0)) fail(ErrorKind::kInvalidArgument, "TVD budget must lie in [0, 1]");
}

TreeEvals evaluate_tree(const TargetModel& target, const DraftTree& tree) {
  const std::size_t start = tree.start_index();
  TreeEvals evals{target.eval(tree.prefix, position_of(start, tree.grid_side)), {}};
  evals.nodes.reserve(tree.nodes.size());
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto context = tree.context_of(static_cast<int>(i));
    evals.nodes.push_back(
        target.eval(context, position_of(start + tree.nodes[i].level, tree.grid_side)));
  }
  return evals;
}

SimilaritySets build_sets(const DraftTree& tree, const TreeEvals& evals, const RelaxConfig& cfg) {
  SimilaritySets sets;
  sets.inter.resize(tree.depth());
  sets.conv.resize(tree.depth() > 0 ? tree.depth() - 1 : 0);
  sets.partners.resize(tree.nodes.size());
  sets.convergent_children.resize(tree.nodes.size());

  auto feature = [&](int node) -> const FeatureVec& {
    return evals.nodes[static_cast<std::size_t>(node)].feature;
  };

  for (std::size_t level = 1; level <= tree.depth(); ++level) {
    std::vector<int> parents;
    if (level == 1) {
      parents.push_back(kRootSlot);
    } else {
      parents = tree.levels[level - 2];
    }
    for (int parent : parents) {
      const auto& siblings = tree.children_of(parent);
      if (!cfg.enable_interchange) continue;
      for (std::size_t i = 0; i < siblings.size(); ++i) {
        for (std::size_t j = i + 1; j < siblings.size(); ++j) {
          const int a = siblings[i];
          const int b = siblings[j];
          if (cosine_sim(feature(a), feature(b)) >= cfg.tau_pos) {
            sets.inter[level - 1].emplace_back(std::min(a, b), std::max(a, b));
            sets.partners[static_cast<std::size_t>(a)].push_back(b);
            sets.partners[static_cast<std::size_t>(b)].push_back(a);
          }
        }
      }
    }
    if (!cfg.enable_convergence || level == tree.depth()) continue;
    for (int a : tree.levels[level - 1]) {
      for (int b : tree.nodes[static_cast<std::size_t>(a)].children) {
        if (cosine_sim(feature(a), feature(b)) >= cfg.tau_seq) {
          sets.conv[level - 1].emplace_back(a, b);
          sets.convergent_children[static_cast<std::size_t>(a)].push_back(b);
        }
      }
    }
  }
  return sets;
}

double RelaxedDist::boosted_prob() const {
  return std::min(1.0, base_q[boosted] + added_mass);
}

ProbDist RelaxedDist::materialize() const {
  std::vector<double> mass(base_q.mass().begin(), base_q.mass().end());
  double moved = 0.0;
  for (TokenId d : donors) {
    moved += mass[d];
    mass[boosted] += mass[d];
    mass[d] = 0.0;
  }
  if (std::fabs(moved - added_mass) > kProbTolerance) {
    fail(ErrorKind::kInvalidArgument, "relaxation donors do not account for the added mass");
  }
  return ProbDist(std::move(mass));
}

namespace {

bool fits(double mass, double remaining) {
  return remaining > 0.0 && mass <= remaining + kProbTolerance;
}

}  // namespace

RelaxResult relax_q(const ProbDist& q, TokenId candidate, double set_mass_interchange,
                    double set_mass_convergence, double budget_left) {
  RelaxResult out{RelaxedDist{q, candidate, 0.0, {}}, 0.0, 0.0, 0.0};
  double remaining = std::max(0.0, budget_left);
  if (set_mass_interchange > 0.0 && fits(set_mass_interchange, remaining)) {
    out.added_interchange = set_mass_interchange;
    remaining -= set_mass_interchange;
  }
  if (set_mass_convergence > 0.0 && fits(set_mass_convergence, remaining)) {
    out.added_convergence = set_mass_convergence;
  }
  out.consumed = out.added_interchange + out.added_convergence;
  out.dist.added_mass = out.consumed;
  return out;
}

RelaxResult relax_q(const ProbDist& q, TokenId candidate,
                    std::span<const TokenId> interchange_tokens,
                    std::span<const TokenId> convergence_tokens, double budget_left) {
  RelaxResult out{RelaxedDist{q, candidate, 0.0, {}}, 0.0, 0.0, 0.0};
  double remaining = std::max(0.0, budget_left);
  std::vector<char> taken(q.size(), 0);
  taken[candidate] = 1;

  auto gather = [&](std::span<const TokenId> tokens, std::vector<TokenId>& picked) {
    double mass = 0.0;
    std::vector<char> local(q.size(), 0);
    for (TokenId t : tokens) {
      if (t >= q.size()) fail(ErrorKind::kInvalidArgument, "donor token out of range");
      if (taken[t] || local[t]) continue;
      local[t] = 1;
      picked.push_back(t);
      mass += q[t];
    }
    return mass;
  };

  std::vector<TokenId> inter;
  const double mass_i = gather(interchange_tokens, inter);
  if (mass_i > 0.0 && fits(mass_i, remaining)) {
    out.added_interchange = mass_i;
    remaining -= mass_i;
    for (TokenId t : inter) {
      taken[t] = 1;
      out.dist.donors.push_back(t);
    }
  }
  std::vector<TokenId> conv;
  const double mass_c = gather(convergence_tokens, conv);
  if (mass_c > 0.0 && fits(mass_c, remaining)) {
    out.added_convergence = mass_c;
    out.dist.donors.insert(out.dist.donors.end(), conv.begin(), conv.end());
  }
  out.consumed = out.added_interchange + out.added_convergence;
  out.dist.added_mass = out.consumed;
  return out;
}

double acceptance_probability(double q, double p) {
  if (p <= 0.0) return q > 0.0 ? 1.0 : 0.0;
  return std::min(1.0, q / p);
}

namespace {

VerifyOutcome verify_impl(const DraftTree& tree, const TreeEvals& evals, const RelaxConfig* relax,
                          SiblingMode mode, RngStream& rng) {
  if (evals.nodes.size() != tree.nodes.size()) {
    fail(ErrorKind::kInvalidArgument, "every tree node needs a target evaluation");
  }
  VerifyOutcome out;
  std::optional<SimilaritySets> sets;
  if (relax) {
    relax->validate();
    sets = build_sets(tree, evals, *relax);
  }
  const double delta = relax ? relax->delta : 0.0;
  double used = 0.0;

  int parent = kRootSlot;
  for (std::size_t level = 1; level <= tree.depth(); ++level) {
    const auto& children = tree.children_of(parent);
    if (children.empty()) break;
    const ProbDist& q = evals.of(parent).dist;
    const ProbDist& p = tree.draft_dist_of(parent);
    if (q.size() != p.size()) fail(ErrorKind::kLengthMismatch, "target and drafter vocabularies differ");

    // Running target/proposal for residual-adjusted sibling retries.
    std::vector<double> qk;
    std::vector<double> pk;
    if (mode == SiblingMode::kResidualAdjusted) {
      qk.assign(q.mass().begin(), q.mass().end());
      pk.assign(p.mass().begin(), p.mass().end());
    }

    bool accepted = false;
    for (std::size_t s = 0; s < children.size(); ++s) {
      const int node = children[s];
      const DraftNode& n = tree.nodes[static_cast<std::size_t>(node)];
      const double r = rng.uniform();

      const bool adjusted = mode == SiblingMode::kResidualAdjusted;
      const double qx = adjusted ? qk[n.token] : q[n.token];
      const double px = adjusted ? pk[n.token] : n.drafter_prob;
      double q_relaxed = qx;

      TraceRecord rec;
      rec.level = level;
      rec.sibling = s;
      rec.token = n.token;
      rec.q = qx;
      rec.p = px;
      rec.r = r;

      if (relax) {
        std::vector<TokenId> inter_tokens;
        for (int b : sets->partners[static_cast<std::size_t>(node)]) {
          inter_tokens.push_back(tree.nodes[static_cast<std::size_t>(b)].token);
        }
        std::vector<TokenId> conv_tokens;
        for (int b : sets->convergent_children[static_cast<std::size_t>(node)]) {
          conv_tokens.push_back(tree.nodes[static_cast<std::size_t>(b)].token);
        }
        const ProbDist base = adjusted ? ProbDist(qk) : q;
        RelaxResult rr = relax_q(base, n.token, inter_tokens, conv_tokens, delta - used);
        used += rr.consumed;
        q_relaxed = rr.dist.boosted_prob();
        rec.added_interchange = rr.added_interchange;
        rec.added_convergence = rr.added_convergence;
        out.relaxations.push_back(std::move(rr.dist));
      }
      rec.q_relaxed = q_relaxed;
      rec.budget_left = std::max(0.0, delta - used);
      rec.accepted = r < acceptance_probability(q_relaxed, px);
      out.trace.push_back(rec);

      if (rec.accepted) {
        out.accepted_tokens.push_back(n.token);
        out.accepted_nodes.push_back(node);
        parent = node;
        accepted = true;
        break;
      }
      if (adjusted) {
        std::vector<double> excess(qk.size());
        const double total = kernels::positive_diff(qk, pk, excess);
        if (total > kProbTolerance * 1e-3) {
          kernels::scale(1.0 / total, excess);
          qk = std::move(excess);
        }
        pk[n.token] = 0.0;
        const double left = kernels::sum(pk);
        if (left > 0.0) kernels::scale(1.0 / left, pk);
      }
    }

    if (!accepted) {
      ProbDist correction_dist;
      if (mode == SiblingMode::kResidualAdjusted) {
        correction_dist = ProbDist::normalized(std::move(qk));
      } else {
        try {
          correction_dist = residual_dist(q, p);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kDegenerateResidual) throw;
          correction_dist = q;
        }
      }
      out.correction = sample_index(correction_dist, rng.uniform());
      break;
    }
  }
  out.alpha = out.accepted_tokens.size();
  out.tvd_consumed = used;
  return out;
}

}  // namespace

VerifyOutcome verify_vanilla(const DraftTree& tree, const TreeEvals& evals, RngStream& rng,
                             SiblingMode sibling_mode) {
  return verify_impl(tree, evals, nullptr, sibling_mode, rng);
}

VerifyOutcome verify_cascade(const DraftTree& tree, const TreeEvals& evals,
                             const RelaxConfig& cfg, RngStream& rng) {
  return verify_impl(tree, evals, &cfg, cfg.sibling_mode, rng);
}

std::vector<double> speculative_emission(const ProbDist& q, const ProbDist& p) {
  if (q.size() != p.size()) fail(ErrorKind::kLengthMismatch, "emission of unequal lengths");
  std::vector<double> out(q.size(), 0.0);
  double accept_total = 0.0;
  for (std::size_t x = 0; x < q.size(); ++x) {
    if (p[x] <= 0.0) continue;
    out[x] = p[x] * acceptance_probability(q[x], p[x]);
    accept_total += out[x];
  }
  const double reject = 1.0 - accept_total;
  if (reject > 0.0) {
    try {
      const ProbDist res = residual_dist(q, p);
      for (std::size_t x = 0; x < q.size(); ++x) out[x] += reject * res[x];
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerateResidual) throw;
    }
  }
  return out;
}

}  // namespace specrelax
