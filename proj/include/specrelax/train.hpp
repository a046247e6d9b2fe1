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
#include <optional>
#include <span>
#include <vector>

#include "specrelax/core.hpp"
#include "specrelax/model.hpp"

namespace specrelax {

struct TrainConfig {
  double c = 2.0;  // weight on convergent positions
  double tau_seq_train = 0.5;
  double learning_rate = 0.5;
  std::size_t epochs = 300;
  double hard_ce_weight = 1.0;
  std::uint64_t seed = 0;
  std::size_t sequences = 32;  // target rollouts used as training data
  std::size_t length = 0;      // tokens per rollout; 0 means a full grid

  void validate() const;
};

struct TrainSample {
  std::optional<TokenId> last_token;  // final prefix token, if any
  ProbDist target_dist;
  FeatureVec target_feature;
  TokenId ground_truth = 0;
  GridPos pos;
};

// Samples one sequence from the target and records, per position, the target
// distribution, its feature and the token that was drawn.
std::vector<TrainSample> rollout_samples(const TargetModel& target, std::size_t length,
                                         std::uint64_t seed);

// w_k = c when cos(F_k, F_k+1) >= tau, else 1; the final sample gets 1.
std::vector<double> mark_convergent(std::span<const TrainSample> sequence, double c,
                                    double tau);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad_weights;  // same layout as LinearDrafterSpec::weights
  std::vector<double> grad_bias;
};

// (1/B) [sum_k w_k softCE(q_k, p_k) + hard_ce_weight sum_k CE(gt_k, p_k)].
LossGrad loss_and_grad(const LinearDrafterSpec& drafter, std::span<const TrainSample> batch,
                       std::span<const double> weights, double hard_ce_weight);

struct TrainReport {
  LinearDrafterSpec drafter;
  std::vector<double> loss_history;  // loss before each epoch, then final
};

// Full-batch gradient descent from zero parameters on cfg.sequences rollouts.
TrainReport train_drafter(const TargetModel& target, const TrainConfig& cfg);

// Rollouts with sample weights, concatenated; shared by training and
// held-out evaluation.
struct SampleSet {
  std::vector<TrainSample> samples;
  std::vector<double> weights;
};
SampleSet build_sample_set(const TargetModel& target, std::size_t sequences,
                           std::size_t length, std::uint64_t seed, double c, double tau);

// Mean KL(q_k || p_k) over positions whose successor is convergent
// (cos(F_k, F_k+1) >= tau), on fresh rollouts drawn from `seed`.
double heldout_convergent_kl(const TargetModel& target, const LinearDrafterSpec& drafter,
                             std::size_t sequences, std::uint64_t seed, double tau);

}  // namespace specrelax
