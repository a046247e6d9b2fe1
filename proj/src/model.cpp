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

#include "specrelax/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "specrelax/kernels.hpp"
#include "specrelax/rng.hpp"

namespace specrelax {

namespace {

std::vector<double> normalize_vec(std::vector<double> v) {
  const double n = std::sqrt(kernels::dot(v, v));
  if (n <= kMinFeatureNorm) fail(ErrorKind::kZeroNormFeature, "cannot normalize zero vector");
  kernels::scale(1.0 / n, v);
  return v;
}

double gaussian(RngStream& rng) {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

GridPos position_of(std::size_t index, int grid_side) {
  const auto cells = static_cast<std::size_t>(grid_side) * static_cast<std::size_t>(grid_side);
  return GridPos::from_index(std::min(index, cells - 1), grid_side);
}

// ---------------------------------------------------------------------------
// TabularModel

TabularModel::TabularModel(TabularModelSpec spec) : spec_(std::move(spec)) {
  if (spec_.vocab == 0) fail(ErrorKind::kInvalidArgument, "tabular vocab must be positive");
  if (spec_.order == 0) fail(ErrorKind::kInvalidArgument, "tabular order must be positive");
  if (spec_.feature_dim == 0) fail(ErrorKind::kInvalidArgument, "feature dim must be positive");
  if (spec_.grid_side <= 0) fail(ErrorKind::kInvalidArgument, "grid side must be positive");

  const std::size_t base = spec_.vocab + 1;
  std::size_t rows = 1;
  for (std::size_t i = 0; i < spec_.order; ++i) {
    rows *= base;
    if (rows > 10'000'000) fail(ErrorKind::kTooLarge, "tabular table too large");
  }

  auto code_of = [&](const std::vector<std::int64_t>& window) {
    if (window.size() != spec_.order) {
      fail(ErrorKind::kFormat, "window length differs from model order");
    }
    std::size_t code = 0;
    for (std::int64_t t : window) {
      std::size_t digit;
      if (t == kStartToken) {
        digit = spec_.vocab;
      } else if (t >= 0 && static_cast<std::size_t>(t) < spec_.vocab) {
        digit = static_cast<std::size_t>(t);
      } else {
        fail(ErrorKind::kFormat, "window token out of range");
      }
      code = code * base + digit;
    }
    return code;
  };

  rows_.assign(rows, ProbDist{});
  features_.assign(rows, FeatureVec{});
  for (const auto& row : spec_.table) {
    if (row.dist.size() != spec_.vocab) fail(ErrorKind::kFormat, "table row has wrong length");
    const std::size_t c = code_of(row.window);
    if (!rows_[c].empty()) fail(ErrorKind::kFormat, "duplicate table window");
    rows_[c] = ProbDist(row.dist);
  }
  for (const auto& row : spec_.feature_table) {
    if (row.feature.size() != spec_.feature_dim) {
      fail(ErrorKind::kFormat, "feature row has wrong length");
    }
    const std::size_t c = code_of(row.window);
    if (features_[c].size() != 0) fail(ErrorKind::kFormat, "duplicate feature window");
    features_[c] = FeatureVec(row.feature);
  }

  // Reachable windows: j leading start symbols followed by k - j tokens.
  for (std::size_t c = 0; c < rows; ++c) {
    std::size_t rest = c;
    std::vector<std::size_t> digits(spec_.order);
    for (std::size_t i = spec_.order; i-- > 0;) {
      digits[i] = rest % base;
      rest /= base;
    }
    bool reachable = true;
    bool seen_token = false;
    for (std::size_t d : digits) {
      if (d == spec_.vocab) {
        if (seen_token) reachable = false;
      } else {
        seen_token = true;
      }
    }
    if (!reachable) continue;
    if (rows_[c].empty() || features_[c].size() == 0) {
      fail(ErrorKind::kUnknownWindow,
           "table does not cover reachable window code " + std::to_string(c));
    }
  }
}

std::size_t TabularModel::window_code(std::span<const TokenId> prefix) const {
  const std::size_t base = spec_.vocab + 1;
  std::size_t code = 0;
  for (std::size_t i = 0; i < spec_.order; ++i) {
    // Window slot i holds prefix[len - order + i] or the start symbol.
    const std::size_t back = spec_.order - i;
    std::size_t digit = spec_.vocab;
    if (prefix.size() >= back) {
      const TokenId t = prefix[prefix.size() - back];
      if (t >= spec_.vocab) fail(ErrorKind::kInvalidArgument, "prefix token out of range");
      digit = t;
    }
    code = code * base + digit;
  }
  return code;
}

TargetEval TabularModel::eval(std::span<const TokenId> prefix, GridPos) const {
  const std::size_t c = window_code(prefix);
  if (rows_[c].empty()) fail(ErrorKind::kUnknownWindow, "no table row for window");
  return {rows_[c], features_[c]};
}

TabularModelSpec random_tabular_spec(std::size_t vocab, std::size_t order,
                                     std::size_t feature_dim, std::uint64_t seed,
                                     int grid_side) {
  TabularModelSpec spec;
  spec.vocab = vocab;
  spec.order = order;
  spec.feature_dim = feature_dim;
  spec.grid_side = grid_side;
  RngStream rng(mix64(seed ^ 0x7ab1e5eedULL));

  // Enumerate reachable windows: j start symbols then order - j tokens.
  for (std::size_t starts = order + 1; starts-- > 0;) {
    const std::size_t free = order - starts;
    std::size_t count = 1;
    for (std::size_t i = 0; i < free; ++i) count *= vocab;
    for (std::size_t idx = 0; idx < count; ++idx) {
      std::vector<std::int64_t> window(order, kStartToken);
      std::size_t rest = idx;
      for (std::size_t i = order; i-- > starts;) {
        window[i] = static_cast<std::int64_t>(rest % vocab);
        rest /= vocab;
      }
      std::vector<double> weights(vocab);
      for (auto& w : weights) w = -std::log(1.0 - rng.uniform()) + 1e-3;
      std::vector<double> feature(feature_dim);
      for (auto& f : feature) f = gaussian(rng);
      const auto dist = ProbDist::normalized(std::move(weights));
      spec.table.push_back({window, {dist.mass().begin(), dist.mass().end()}});
      spec.feature_table.push_back({window, std::move(feature)});
    }
  }
  return spec;
}

// ---------------------------------------------------------------------------
// GridWorldModel

GridWorldSpec default_gridworld_spec() {
  GridWorldSpec spec;
  spec.grid_side = 8;
  spec.vocab = 32;
  spec.feature_dim = 8;
  constexpr std::size_t kClusters = 4;
  constexpr std::size_t kRegions = 3;
  spec.clusters.resize(spec.vocab);
  for (std::size_t t = 0; t < spec.vocab; ++t) spec.clusters[t] = t / (spec.vocab / kClusters);
  spec.regions.resize(64);
  for (int row = 0; row < 8; ++row) {
    const std::size_t region = row <= 2 ? 0 : (row <= 5 ? 1 : 2);
    for (int col = 0; col < 8; ++col) spec.regions[static_cast<std::size_t>(row * 8 + col)] = region;
  }
  spec.preferred_cluster = {0, 1, 2};
  for (std::size_t r = 0; r < kRegions; ++r) {
    std::vector<double> u(spec.feature_dim, 0.0);
    u[r] = 1.0;
    spec.region_anchors.push_back(u);
  }
  for (std::size_t c = 0; c < kClusters; ++c) {
    std::vector<double> v(spec.feature_dim, 0.0);
    v[kRegions + c] = 1.0;
    spec.cluster_anchors.push_back(v);
  }
  return spec;
}

GridWorldModel::GridWorldModel(GridWorldSpec spec) : spec_(std::move(spec)) {
  const auto& s = spec_;
  if (s.grid_side <= 0) fail(ErrorKind::kInvalidArgument, "grid side must be positive");
  if (s.vocab == 0 || s.feature_dim == 0) {
    fail(ErrorKind::kInvalidArgument, "vocab and feature dim must be positive");
  }
  const std::size_t k = s.num_clusters();
  const std::size_t r = s.num_regions();
  if (k == 0 || r == 0) fail(ErrorKind::kInvalidArgument, "need at least one cluster and region");
  if (s.clusters.size() != s.vocab) fail(ErrorKind::kFormat, "cluster map must cover the vocabulary");
  const auto cells = static_cast<std::size_t>(s.grid_side) * static_cast<std::size_t>(s.grid_side);
  if (s.regions.size() != cells) fail(ErrorKind::kFormat, "region map must cover the grid");
  if (s.preferred_cluster.size() != r) {
    fail(ErrorKind::kFormat, "preferred cluster needed for every region");
  }
  std::vector<std::size_t> cluster_size(k, 0);
  for (std::size_t c : s.clusters) {
    if (c >= k) fail(ErrorKind::kFormat, "cluster id out of range");
    ++cluster_size[c];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (cluster_size[c] == 0) fail(ErrorKind::kFormat, "empty cluster");
  }
  for (std::size_t g : s.regions) {
    if (g >= r) fail(ErrorKind::kFormat, "region id out of range");
  }
  if (!(s.in_cluster_mass > 0.0 && s.in_cluster_mass < 1.0)) {
    fail(ErrorKind::kInvalidArgument, "in-cluster mass must lie in (0, 1)");
  }
  if (!std::isfinite(s.feature_mix)) fail(ErrorKind::kNonFinite, "feature mix must be finite");
  if (!(s.feature_jitter >= 0.0 && s.feature_jitter <= 0.05)) {
    fail(ErrorKind::kInvalidArgument, "feature jitter must lie in [0, 0.05]");
  }
  for (const auto& u : s.region_anchors) {
    if (u.size() != s.feature_dim) fail(ErrorKind::kFormat, "region anchor has wrong dimension");
    const double n = FeatureVec(u).norm();
    if (std::fabs(n - 1.0) > 1e-6) fail(ErrorKind::kInvalidArgument, "region anchors must be unit vectors");
  }
  for (const auto& v : s.cluster_anchors) {
    if (v.size() != s.feature_dim) fail(ErrorKind::kFormat, "cluster anchor has wrong dimension");
    FeatureVec check(v);
  }

  for (std::size_t g = 0; g < r; ++g) {
    const std::size_t c = s.preferred_cluster[g];
    if (c >= k) fail(ErrorKind::kFormat, "preferred cluster out of range");
    const std::size_t inside = cluster_size[c];
    if (inside == s.vocab) {
      fail(ErrorKind::kInvalidArgument, "preferred cluster cannot span the whole vocabulary");
    }
    const double in_mass = s.in_cluster_mass / static_cast<double>(inside);
    const double out_mass = (1.0 - s.in_cluster_mass) / static_cast<double>(s.vocab - inside);
    std::vector<double> mass(s.vocab);
    for (std::size_t t = 0; t < s.vocab; ++t) mass[t] = s.clusters[t] == c ? in_mass : out_mass;
    region_dists_.emplace_back(std::move(mass));
  }
}

std::size_t GridWorldModel::region_of(GridPos pos) const {
  if (pos.row < 0 || pos.col < 0 || pos.row >= spec_.grid_side || pos.col >= spec_.grid_side) {
    fail(ErrorKind::kInvalidArgument, "position outside the grid");
  }
  return spec_.regions[pos.flatten(spec_.grid_side)];
}

TargetEval GridWorldModel::eval(std::span<const TokenId> prefix, GridPos pos) const {
  const std::size_t region = region_of(pos);
  std::vector<double> f = spec_.region_anchors[region];
  if (!prefix.empty()) {
    const TokenId last = prefix.back();
    if (last >= spec_.vocab) fail(ErrorKind::kInvalidArgument, "prefix token out of range");
    kernels::axpy(spec_.feature_mix, spec_.cluster_anchors[spec_.clusters[last]], f);
  }
  if (spec_.feature_jitter > 0.0) {
    std::uint64_t h = mix64(0x6a17e5ULL + prefix.size());
    for (TokenId t : prefix) h = mix64(h ^ (t + 0x9e3779b97f4a7c15ULL));
    RngStream noise(h);
    std::vector<double> e(f.size());
    for (auto& x : e) x = 2.0 * noise.uniform() - 1.0;
    const double n = std::sqrt(kernels::dot(e, e));
    if (n > 0.0) kernels::axpy(spec_.feature_jitter * noise.uniform() / n, e, f);
  }
  return {region_dists_[region], FeatureVec(normalize_vec(std::move(f)))};
}

// ---------------------------------------------------------------------------
// Linear drafter

LinearDrafterSpec LinearDrafterSpec::zeros(std::size_t vocab, int grid_side) {
  LinearDrafterSpec spec;
  spec.vocab = vocab;
  spec.grid_side = grid_side;
  spec.weights.assign(vocab * spec.context_dim(), 0.0);
  spec.bias.assign(vocab, 0.0);
  return spec;
}

LinearDrafter::LinearDrafter(LinearDrafterSpec spec) : spec_(std::move(spec)) {
  if (spec_.vocab == 0) fail(ErrorKind::kInvalidArgument, "drafter vocab must be positive");
  if (spec_.grid_side < 0) fail(ErrorKind::kInvalidArgument, "drafter grid side must be non-negative");
  if (spec_.weights.size() != spec_.vocab * spec_.context_dim()) {
    fail(ErrorKind::kFormat, "drafter weight matrix has wrong size");
  }
  if (spec_.bias.size() != spec_.vocab) fail(ErrorKind::kFormat, "drafter bias has wrong size");
  for (double w : spec_.weights) {
    if (!std::isfinite(w)) fail(ErrorKind::kNonFinite, "non-finite drafter weight");
  }
  for (double b : spec_.bias) {
    if (!std::isfinite(b)) fail(ErrorKind::kNonFinite, "non-finite drafter bias");
  }
}

std::vector<double> drafter_context(std::size_t vocab, int grid_side,
                                    std::optional<TokenId> last_token, GridPos pos) {
  const auto n = static_cast<std::size_t>(grid_side);
  std::vector<double> ctx(vocab + 2 * n, 0.0);
  if (last_token) {
    if (*last_token >= vocab) fail(ErrorKind::kInvalidArgument, "prefix token out of range");
    ctx[*last_token] = 1.0;
  }
  if (pos.row >= 0 && pos.row < grid_side) ctx[vocab + static_cast<std::size_t>(pos.row)] = 1.0;
  if (pos.col >= 0 && pos.col < grid_side) ctx[vocab + n + static_cast<std::size_t>(pos.col)] = 1.0;
  return ctx;
}

ProbDist linear_drafter_dist(const LinearDrafterSpec& spec, std::span<const double> context) {
  const std::size_t d = spec.context_dim();
  std::vector<double> logits(spec.vocab);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < spec.vocab; ++t) {
    logits[t] = spec.bias[t] + kernels::dot(std::span(spec.weights).subspan(t * d, d), context);
    top = std::max(top, logits[t]);
  }
  for (auto& z : logits) z = std::exp(z - top);
  return ProbDist::normalized(std::move(logits));
}

ProbDist LinearDrafter::eval(std::span<const TokenId> prefix, GridPos pos) const {
  std::optional<TokenId> last;
  if (!prefix.empty()) last = prefix.back();
  const auto ctx = drafter_context(spec_.vocab, spec_.grid_side, last, pos);
  return linear_drafter_dist(spec_, ctx);
}

LinearDrafterSpec mode_seeking_drafter(const GridWorldSpec& grid, double rank_decay,
                                       double off_cluster_boost) {
  const GridWorldModel model(grid);
  auto spec = LinearDrafterSpec::zeros(grid.vocab, grid.grid_side);
  const std::size_t d = spec.context_dim();

  std::vector<std::size_t> rank(grid.vocab);
  std::vector<std::size_t> seen(grid.num_clusters(), 0);
  for (std::size_t t = 0; t < grid.vocab; ++t) rank[t] = seen[grid.clusters[t]]++;

  for (int row = 0; row < grid.grid_side; ++row) {
    const std::size_t region = model.region_of({row, 0});
    const std::size_t preferred = grid.preferred_cluster[region];
    const ProbDist& q = model.region_dist(region);
    for (std::size_t t = 0; t < grid.vocab; ++t) {
      double logit = std::log(q[t]);
      if (grid.clusters[t] == preferred) {
        logit -= rank_decay * static_cast<double>(rank[t]);
      } else {
        logit += off_cluster_boost;
      }
      spec.weights[t * d + grid.vocab + static_cast<std::size_t>(row)] = logit;
    }
  }
  return spec;
}

// ---------------------------------------------------------------------------

std::size_t SequenceDistribution::code(std::span<const TokenId> seq) const {
  if (seq.size() != length) fail(ErrorKind::kLengthMismatch, "sequence length differs");
  std::size_t c = 0;
  for (TokenId t : seq) {
    if (t >= vocab) fail(ErrorKind::kInvalidArgument, "token out of range");
    c = c * vocab + t;
  }
  return c;
}

SequenceDistribution enumerate_ar_distribution(const TargetModel& model, std::size_t length) {
  const std::size_t v = model.vocab_size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < length; ++i) {
    total *= v;
    if (total > 1'000'000) fail(ErrorKind::kTooLarge, "V^L exceeds 1e6");
  }
  const auto cells = static_cast<std::size_t>(model.grid_side()) *
                     static_cast<std::size_t>(model.grid_side());
  if (length > cells) fail(ErrorKind::kInvalidArgument, "length exceeds grid capacity");

  SequenceDistribution out{v, length, std::vector<double>(total, 0.0)};
  std::vector<TokenId> seq;
  seq.reserve(length);
  auto recurse = [&](auto&& self, double prob, std::size_t code) -> void {
    if (seq.size() == length) {
      out.prob[code] = prob;
      return;
    }
    const auto eval = model.eval(seq, position_of(seq.size(), model.grid_side()));
    for (TokenId t = 0; t < v; ++t) {
      seq.push_back(t);
      self(self, prob * eval.dist[t], code * v + t);
      seq.pop_back();
    }
  };
  recurse(recurse, 1.0, 0);
  return out;
}

}  // namespace specrelax
