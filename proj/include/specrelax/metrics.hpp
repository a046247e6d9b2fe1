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
#include <span>
#include <string>
#include <string_view>

namespace specrelax {

struct Metrics {
  double mean_alpha = 0.0;  // accepted draft tokens per verify call
  std::uint64_t target_calls = 0;
  std::uint64_t drafter_calls = 0;
  // tokens / (target_calls + kappa * drafter_calls); autoregressive decoding
  // scores exactly 1.
  double speedup_proxy = 0.0;
  double accumulated_tvd = 0.0;
  double per_token_tvd = 0.0;
  std::uint64_t tokens_emitted = 0;

  bool operator==(const Metrics&) const = default;
};

// Field names on the wire: meanAlpha, targetCalls, drafterCalls,
// speedupProxy, accumulatedTVD, perTokenTVD, tokensEmitted.
std::string metrics_to_json(const Metrics& m);
Metrics metrics_from_json(std::string_view text);

// Real-valued fields are averaged over runs; call and token counts are
// summed.
Metrics aggregate_metrics(std::span<const Metrics> runs);

}  // namespace specrelax
