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
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "specrelax/decode.hpp"
#include "specrelax/model.hpp"
#include "specrelax/train.hpp"

namespace specrelax {

// "0..199" (inclusive), "3,5,8" or a single integer.
std::vector<std::uint64_t> parse_seeds(std::string_view text);

struct ExperimentConfig {
  std::string model_path;
  std::string drafter_path;  // empty: mirror the target (p == q)
  DecodeOptions decode;
  TrainConfig train;
  std::vector<std::uint64_t> seeds;
  std::size_t length = 0;  // 0: full grid
  std::string metrics_out;
  std::string trace_out;
  std::string heatmap_out;
  int heatmap_row_begin = 0;
  int heatmap_row_end = -1;  // exclusive; -1 means the last row

  // Throws kIo for missing model files and kInvalidArgument otherwise.
  void validate() const;
};

// Keys are the long CLI flag names without dashes ("model", "tree",
// "tau-pos", "seeds", ...). Keys missing from the text keep `base` values.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         ExperimentConfig base = {});

struct SeedRun {
  std::uint64_t seed = 0;
  DecodeResult result;
};

struct ExperimentResult {
  std::vector<SeedRun> runs;  // in seed-list order
  Metrics aggregate;
};

// One independent session per seed, spread over `threads` workers (0: one per
// hardware thread). Output does not depend on the thread count.
ExperimentResult run_experiment(const TargetModel& target, const Drafter* drafter,
                                const DecodeOptions& options,
                                std::span<const std::uint64_t> seeds, std::size_t length,
                                std::size_t threads = 0);

// Loads the models, runs every seed and writes the configured outputs.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// One {"kind":"seed"} object per run followed by one {"kind":"aggregate"}.
std::string metrics_jsonl(const ExperimentResult& result);

struct McResult {
  double tvd = 0.0;    // empirical vs exact sequence distribution
  double bound = 0.0;  // 3 sqrt(V^L / M)
  std::size_t samples = 0;
  bool pass = false;   // tvd <= bound
};

// Decodes `samples` sequences of `length` tokens, sample i seeded from
// (seed, i), and compares the empirical distribution to the exact one.
McResult mc_distribution_test(const TargetModel& target, const Drafter* drafter,
                              const DecodeOptions& options, std::size_t samples,
                              std::size_t length, std::uint64_t seed = 0);

// F_k for every position: the feature of the target evaluation that
// produced token k.
std::vector<FeatureVec> sequence_features(const TargetModel& target,
                                          std::span<const TokenId> tokens);

struct Heatmap {
  std::vector<GridPos> cells;
  std::vector<double> values;  // cells.size() squared, row-major

  double at(std::size_t i, std::size_t j) const { return values[i * cells.size() + j]; }
};

// Pairwise cosine of per-position features over grid rows [row_begin,
// row_end). Throws kRowOutOfRange for ranges outside the grid or past the
// decoded tokens.
Heatmap similarity_heatmap(const TargetModel& target, std::span<const TokenId> tokens,
                           int row_begin, int row_end);

// Header "cell,r0c0,r0c1,..." then one line per cell.
std::string heatmap_csv(const Heatmap& heatmap);

}  // namespace specrelax
