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

#include "specrelax/decode.hpp"

#include <algorithm>

#include <json.hpp>

namespace specrelax {

std::string_view to_string(DecodeMode mode) {
  switch (mode) {
    case DecodeMode::kAr: return "ar";
    case DecodeMode::kVanilla: return "vanilla";
    case DecodeMode::kCascade: return "cascade";
  }
  return "unknown";
}

DecodeMode parse_decode_mode(std::string_view text) {
  if (text == "ar") return DecodeMode::kAr;
  if (text == "vanilla") return DecodeMode::kVanilla;
  if (text == "cascade") return DecodeMode::kCascade;
  fail(ErrorKind::kInvalidArgument, "mode must be ar, vanilla or cascade");
}

DecodeResult decode_sequence(const TargetModel& target, const Drafter* drafter,
                             const DecodeOptions& options, std::size_t length,
                             RngStream& rng) {
  const int side = target.grid_side();
  DecodeResult out;
  out.tokens.reserve(length);
  Metrics& m = out.metrics;

  if (options.mode == DecodeMode::kAr) {
    while (out.tokens.size() < length) {
      const auto eval = target.eval(out.tokens, position_of(out.tokens.size(), side));
      ++m.target_calls;
      out.tokens.push_back(sample_index(eval.dist, rng.uniform()));
    }
    out.cycles = m.target_calls;
    m.tokens_emitted = out.tokens.size();
    m.mean_alpha = 1.0;
    m.speedup_proxy = 1.0;
    return out;
  }

  if (!drafter) fail(ErrorKind::kInvalidArgument, "speculative decoding needs a drafter");
  if (drafter->vocab_size() != target.vocab_size()) {
    fail(ErrorKind::kLengthMismatch, "drafter and target vocabularies differ");
  }
  options.mask.validate();
  if (options.mode == DecodeMode::kCascade) options.relax.validate();
  if (options.kappa < 0.0) fail(ErrorKind::kInvalidArgument, "kappa must be non-negative");

  std::size_t accepted = 0;
  while (out.tokens.size() < length) {
    const std::size_t start = out.tokens.size();
    const TreeMask mask = options.mask.truncated(std::min(options.mask.depth(), length - start));
    const DraftTree tree = sample_draft_tree(*drafter, out.tokens, position_of(start, side),
                                             side, mask, rng, options.candidates);
    m.drafter_calls += tree.depth();
    const TreeEvals evals = evaluate_tree(target, tree);
    ++m.target_calls;

    VerifyOutcome v = options.mode == DecodeMode::kVanilla
                          ? verify_vanilla(tree, evals, rng, options.relax.sibling_mode)
                          : verify_cascade(tree, evals, options.relax, rng);
    if (options.on_verify) options.on_verify(tree, v);
    out.tokens.insert(out.tokens.end(), v.accepted_tokens.begin(), v.accepted_tokens.end());
    if (v.correction) out.tokens.push_back(*v.correction);
    accepted += v.alpha;
    m.accumulated_tvd += v.tvd_consumed;
    if (options.keep_trace) {
      out.trace.push_back(CycleTrace{out.cycles, start, std::move(v.trace)});
    }
    ++out.cycles;
  }

  m.tokens_emitted = out.tokens.size();
  m.mean_alpha = out.cycles ? static_cast<double>(accepted) / static_cast<double>(out.cycles) : 0.0;
  const double cost = static_cast<double>(m.target_calls) +
                      options.kappa * static_cast<double>(m.drafter_calls);
  m.speedup_proxy = cost > 0.0 ? static_cast<double>(m.tokens_emitted) / cost : 0.0;
  m.per_token_tvd =
      m.tokens_emitted ? m.accumulated_tvd / static_cast<double>(m.tokens_emitted) : 0.0;
  return out;
}

std::string trace_to_jsonl(std::span<const CycleTrace> trace, std::uint64_t seed) {
  std::string out;
  for (const CycleTrace& c : trace) {
    for (const TraceRecord& r : c.decisions) {
      nlohmann::ordered_json j;
      j["seed"] = seed;
      j["cycle"] = c.cycle;
      j["position"] = c.start_index + r.level - 1;
      j["level"] = r.level;
      j["sibling"] = r.sibling;
      j["token"] = r.token;
      j["q"] = r.q;
      j["qRelaxed"] = r.q_relaxed;
      j["p"] = r.p;
      j["addedMassI"] = r.added_interchange;
      j["addedMassC"] = r.added_convergence;
      j["r"] = r.r;
      j["decision"] = r.accepted ? "accept" : "reject";
      j["budgetLeft"] = r.budget_left;
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

}  // namespace specrelax
