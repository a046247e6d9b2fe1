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

#include "specrelax/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "specrelax/kernels.hpp"

namespace specrelax {

ProbDist::ProbDist(std::vector<double> mass) : mass_(std::move(mass)) {
  if (mass_.empty()) fail(ErrorKind::kInvalidArgument, "empty distribution");
  for (double m : mass_) {
    if (!std::isfinite(m)) fail(ErrorKind::kNonFinite, "non-finite probability");
    if (m < 0.0) fail(ErrorKind::kInvalidArgument, "negative probability");
  }
  const double total = kernels::sum(mass_);
  if (std::fabs(total - 1.0) > kProbTolerance) {
    fail(ErrorKind::kInvalidArgument,
         "probabilities sum to " + std::to_string(total));
  }
}

ProbDist ProbDist::uniform(std::size_t vocab) {
  if (vocab == 0) fail(ErrorKind::kInvalidArgument, "empty vocabulary");
  return ProbDist(std::vector<double>(vocab, 1.0 / static_cast<double>(vocab)));
}

ProbDist ProbDist::one_hot(std::size_t vocab, TokenId token) {
  if (token >= vocab) fail(ErrorKind::kInvalidArgument, "token out of range");
  std::vector<double> mass(vocab, 0.0);
  mass[token] = 1.0;
  return ProbDist(std::move(mass));
}

ProbDist ProbDist::normalized(std::vector<double> weights) {
  for (double w : weights) {
    if (!std::isfinite(w)) fail(ErrorKind::kNonFinite, "non-finite weight");
    if (w < 0.0) fail(ErrorKind::kInvalidArgument, "negative weight");
  }
  const double total = kernels::sum(weights);
  if (!(total > 0.0)) fail(ErrorKind::kInvalidArgument, "weights sum to zero");
  kernels::scale(1.0 / total, weights);
  return ProbDist(std::move(weights));
}

FeatureVec::FeatureVec(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!std::isfinite(v)) fail(ErrorKind::kNonFinite, "non-finite feature entry");
  }
}

double FeatureVec::norm() const { return std::sqrt(kernels::dot(values_, values_)); }

double cosine_sim(const FeatureVec& a, const FeatureVec& b) {
  if (a.size() != b.size()) {
    fail(ErrorKind::kLengthMismatch, "feature dimensions differ");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na <= kMinFeatureNorm || nb <= kMinFeatureNorm) {
    fail(ErrorKind::kZeroNormFeature, "feature norm too small for cosine");
  }
  const double c = kernels::dot(a.values(), b.values()) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

double tvd(const ProbDist& a, const ProbDist& b) {
  if (a.size() != b.size()) fail(ErrorKind::kLengthMismatch, "tvd of unequal lengths");
  return 0.5 * kernels::sum_abs_diff(a.mass(), b.mass());
}

ProbDist residual_dist(const ProbDist& q, const ProbDist& p) {
  if (q.size() != p.size()) {
    fail(ErrorKind::kLengthMismatch, "residual of unequal lengths");
  }
  std::vector<double> excess(q.size());
  const double total = kernels::positive_diff(q.mass(), p.mass(), excess);
  if (total <= 0.0) fail(ErrorKind::kDegenerateResidual, "q - p has no positive mass");
  // Excess below round-off would renormalize to noise; treat as degenerate.
  if (total <= kProbTolerance * 1e-3) {
    fail(ErrorKind::kDegenerateResidual, "q - p positive mass is round-off only");
  }
  return ProbDist::normalized(std::move(excess));
}

TokenId sample_index(const ProbDist& dist, double u) {
  const auto mass = dist.mass();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (mass[i] <= 0.0) continue;
    last_positive = i;
    cumulative += mass[i];
    if (u < cumulative) return static_cast<TokenId>(i);
  }
  return static_cast<TokenId>(last_positive);
}

double kl_divergence(const ProbDist& q, const ProbDist& p) {
  if (q.size() != p.size()) fail(ErrorKind::kLengthMismatch, "kl of unequal lengths");
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0) continue;
    acc += q[i] * (std::log(q[i]) - std::log(std::max(p[i], 1e-12)));
  }
  return acc;
}

}  // namespace specrelax
