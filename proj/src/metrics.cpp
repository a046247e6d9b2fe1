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

#include "specrelax/metrics.hpp"

#include <json.hpp>

#include "specrelax/error.hpp"

namespace specrelax {

namespace {

nlohmann::ordered_json to_object(const Metrics& m) {
  nlohmann::ordered_json j;
  j["meanAlpha"] = m.mean_alpha;
  j["targetCalls"] = m.target_calls;
  j["drafterCalls"] = m.drafter_calls;
  j["speedupProxy"] = m.speedup_proxy;
  j["accumulatedTVD"] = m.accumulated_tvd;
  j["perTokenTVD"] = m.per_token_tvd;
  j["tokensEmitted"] = m.tokens_emitted;
  return j;
}

}  // namespace

std::string metrics_to_json(const Metrics& m) { return to_object(m).dump(); }

Metrics metrics_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Metrics m;
    m.mean_alpha = j.at("meanAlpha").get<double>();
    m.target_calls = j.at("targetCalls").get<std::uint64_t>();
    m.drafter_calls = j.at("drafterCalls").get<std::uint64_t>();
    m.speedup_proxy = j.at("speedupProxy").get<double>();
    m.accumulated_tvd = j.at("accumulatedTVD").get<double>();
    m.per_token_tvd = j.at("perTokenTVD").get<double>();
    m.tokens_emitted = j.at("tokensEmitted").get<std::uint64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("bad metrics record: ") + e.what());
  }
}

Metrics aggregate_metrics(std::span<const Metrics> runs) {
  Metrics out;
  if (runs.empty()) return out;
  for (const Metrics& m : runs) {
    out.mean_alpha += m.mean_alpha;
    out.speedup_proxy += m.speedup_proxy;
    out.accumulated_tvd += m.accumulated_tvd;
    out.per_token_tvd += m.per_token_tvd;
    out.target_calls += m.target_calls;
    out.drafter_calls += m.drafter_calls;
    out.tokens_emitted += m.tokens_emitted;
  }
  const double n = static_cast<double>(runs.size());
  out.mean_alpha /= n;
  out.speedup_proxy /= n;
  out.accumulated_tvd /= n;
  out.per_token_tvd /= n;
  return out;
}

}  // namespace specrelax
