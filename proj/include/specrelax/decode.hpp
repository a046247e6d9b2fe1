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
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "specrelax/metrics.hpp"
#include "specrelax/model.hpp"
#include "specrelax/rng.hpp"
#include "specrelax/tree.hpp"
#include "specrelax/verify.hpp"

namespace specrelax {

enum class DecodeMode { kAr, kVanilla, kCascade };

std::string_view to_string(DecodeMode mode);
DecodeMode parse_decode_mode(std::string_view text);

struct DecodeOptions {
  DecodeMode mode = DecodeMode::kCascade;
  TreeMask mask = default_tree_mask();
  RelaxConfig relax;
  CandidateMode candidates = CandidateMode::kTopW;
  double kappa = 0.1;  // drafter cost relative to one target pass
  bool keep_trace = false;
  // Called after every verify call, before its tokens are appended.
  std::function<void(const DraftTree&, const VerifyOutcome&)> on_verify;
};

struct CycleTrace {
  std::size_t cycle = 0;
  std::size_t start_index = 0;
  std::vector<TraceRecord> decisions;
};

struct DecodeResult {
  std::vector<TokenId> tokens;
  Metrics metrics;
  std::size_t cycles = 0;  // verify calls; target calls in ar mode
  std::vector<CycleTrace> trace;
};

// Generates `length` tokens. Each speculative cycle drafts a tree truncated
// to the tokens still missing, verifies it with one target pass and appends
// the accepted path plus any correction. `drafter` may be null in ar mode.
DecodeResult decode_sequence(const TargetModel& target, const Drafter* drafter,
                             const DecodeOptions& options, std::size_t length,
                             RngStream& rng);

// One JSON object per decision, newline-terminated.
std::string trace_to_jsonl(std::span<const CycleTrace> trace, std::uint64_t seed);

}  // namespace specrelax
