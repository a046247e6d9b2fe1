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

#include "specrelax/train.hpp"

#include <cmath>

#include "specrelax/kernels.hpp"
#include "specrelax/rng.hpp"

namespace specrelax {

namespace {

constexpr double kLogFloor = 1e-12;

std::size_t default_length(const TargetModel& target, std::size_t length) {
  if (length) return length;
  const auto side = static_cast<std::size_t>(target.grid_side());
  return side * side;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(c >= 1.0)) fail(ErrorKind::kInvalidArgument, "c must be >= 1");
  if (!(learning_rate > 0.0)) fail(ErrorKind::kInvalidArgument, "learning rate must be > 0");
  if (!(hard_ce_weight >= 0.0)) fail(ErrorKind::kInvalidArgument, "hard CE weight must be >= 0");
  if (sequences == 0) fail(ErrorKind::kInvalidArgument, "need at least one training sequence");
}

std::vector<TrainSample> rollout_samples(const TargetModel& target, std::size_t length,
                                         std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<TokenId> seq;
  std::vector<TrainSample> out;
  out.reserve(length);
  for (std::size_t k = 0; k < length; ++k) {
    const GridPos pos = position_of(k, target.grid_side());
    TargetEval eval = target.eval(seq, pos);
    const TokenId t = sample_index(eval.dist, rng.uniform());
    TrainSample s;
    if (!seq.empty()) s.last_token = seq.back();
    s.target_dist = std::move(eval.dist);
    s.target_feature = std::move(eval.feature);
    s.ground_truth = t;
    s.pos = pos;
    out.push_back(std::move(s));
    seq.push_back(t);
  }
  return out;
}

std::vector<double> mark_convergent(std::span<const TrainSample> sequence, double c,
                                    double tau) {
  std::vector<double> w(sequence.size(), 1.0);
  for (std::size_t k = 0; k + 1 < sequence.size(); ++k) {
    if (cosine_sim(sequence[k].target_feature, sequence[k + 1].target_feature) >= tau) w[k] = c;
  }
  return w;
}

LossGrad loss_and_grad(const LinearDrafterSpec& drafter, std::span<const TrainSample> batch,
                       std::span<const double> weights, double hard_ce_weight) {
  if (weights.size() != batch.size()) {
    fail(ErrorKind::kLengthMismatch, "one weight per sample required");
  }
  const std::size_t v = drafter.vocab;
  const std::size_t d = drafter.context_dim();
  LossGrad out;
  out.grad_weights.assign(v * d, 0.0);
  out.grad_bias.assign(v, 0.0);
  if (batch.empty()) return out;

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> dz(v);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const TrainSample& s = batch[k];
    if (s.target_dist.size() != v) fail(ErrorKind::kLengthMismatch, "target vocab differs");
    const auto ctx = drafter_context(v, drafter.grid_side, s.last_token, s.pos);
    const ProbDist p = linear_drafter_dist(drafter, ctx);
    const double w = weights[k];

    double soft = 0.0;
    for (std::size_t x = 0; x < v; ++x) {
      if (s.target_dist[x] > 0.0) soft -= s.target_dist[x] * std::log(std::max(p[x], kLogFloor));
    }
    const double hard = -std::log(std::max(p[s.ground_truth], kLogFloor));
    const double term = w * soft + hard_ce_weight * hard;
    if (!std::isfinite(term)) fail(ErrorKind::kNonFinite, "loss is not finite");
    out.loss += term * inv_b;

    // d/dz of softmax cross-entropy against target t is p - t.
    for (std::size_t x = 0; x < v; ++x) {
      dz[x] = (w + hard_ce_weight) * p[x] - w * s.target_dist[x];
    }
    dz[s.ground_truth] -= hard_ce_weight;
    for (std::size_t x = 0; x < v; ++x) {
      const double g = dz[x] * inv_b;
      out.grad_bias[x] += g;
      kernels::axpy(g, ctx, std::span<double>(out.grad_weights).subspan(x * d, d));
    }
  }
  return out;
}

SampleSet build_sample_set(const TargetModel& target, std::size_t sequences,
                           std::size_t length, std::uint64_t seed, double c, double tau) {
  SampleSet set;
  const std::size_t len = default_length(target, length);
  for (std::size_t i = 0; i < sequences; ++i) {
    auto seq = rollout_samples(target, len, mix64(seed * 0x100000001b3ULL + i));
    const auto w = mark_convergent(seq, c, tau);
    set.weights.insert(set.weights.end(), w.begin(), w.end());
    for (auto& s : seq) set.samples.push_back(std::move(s));
  }
  return set;
}

TrainReport train_drafter(const TargetModel& target, const TrainConfig& cfg) {
  cfg.validate();
  const auto set = build_sample_set(target, cfg.sequences, cfg.length, cfg.seed, cfg.c,
                                    cfg.tau_seq_train);
  TrainReport report;
  report.drafter = LinearDrafterSpec::zeros(target.vocab_size(), target.grid_side());
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const LossGrad lg = loss_and_grad(report.drafter, set.samples, set.weights,
                                      cfg.hard_ce_weight);
    report.loss_history.push_back(lg.loss);
    kernels::axpy(-cfg.learning_rate, lg.grad_weights, report.drafter.weights);
    kernels::axpy(-cfg.learning_rate, lg.grad_bias, report.drafter.bias);
  }
  report.loss_history.push_back(
      loss_and_grad(report.drafter, set.samples, set.weights, cfg.hard_ce_weight).loss);
  return report;
}

double heldout_convergent_kl(const TargetModel& target, const LinearDrafterSpec& drafter,
                             std::size_t sequences, std::uint64_t seed, double tau) {
  // c = 2 only tags convergent positions; the value itself is unused.
  const auto set = build_sample_set(target, sequences, 0, seed, 2.0, tau);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < set.samples.size(); ++k) {
    if (set.weights[k] == 1.0) continue;
    const TrainSample& s = set.samples[k];
    const auto ctx = drafter_context(drafter.vocab, drafter.grid_side, s.last_token, s.pos);
    total += kl_divergence(s.target_dist, linear_drafter_dist(drafter, ctx));
    ++count;
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

}  // namespace specrelax
