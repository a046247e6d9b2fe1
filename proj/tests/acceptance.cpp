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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fail.
//
// usage: acceptance <path-to-specrelax-cli> <work-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "specrelax/harness.hpp"
#include "specrelax/model_io.hpp"
#include "specrelax/train.hpp"

using namespace specrelax;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::shared_ptr<TabularModel> tabular(std::size_t vocab, std::size_t order, std::uint64_t seed) {
  return std::make_shared<TabularModel>(random_tabular_spec(vocab, order, 3, seed));
}

// ---------------------------------------------------------------------------
// 1. Per-step emission of the ratio test plus residual correction, integrated
// by hand for every context of small tabular models.

Outcome analytic_exactness() {
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t vocab : {2u, 3u, 4u}) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      auto target = tabular(vocab, 1, seed);
      auto drafter = tabular(vocab, 1, seed + 1000);
      std::vector<std::vector<TokenId>> contexts{{}};
      for (TokenId t = 0; t < vocab; ++t) contexts.push_back({t});
      for (const auto& ctx : contexts) {
        const GridPos pos = position_of(ctx.size(), 8);
        const ProbDist q = target->eval(ctx, pos).dist;
        const ProbDist p = drafter->eval(ctx, pos).dist;
        double accept = 0.0;
        double residual_total = 0.0;
        for (std::size_t x = 0; x < vocab; ++x) {
          accept += p[x] > 0.0 ? p[x] * std::min(1.0, q[x] / p[x]) : 0.0;
          residual_total += std::max(0.0, q[x] - p[x]);
        }
        const auto lib = speculative_emission(q, p);
        for (std::size_t x = 0; x < vocab; ++x) {
          const double direct = p[x] > 0.0 ? p[x] * std::min(1.0, q[x] / p[x]) : 0.0;
          const double resid = residual_total > 0.0
                                   ? std::max(0.0, q[x] - p[x]) / residual_total
                                   : 0.0;
          const double e = direct + (1.0 - accept) * resid;
          worst = std::max({worst, std::fabs(e - q[x]), std::fabs(lib[x] - q[x])});
        }
        ++checked;
      }
    }
  }
  return {worst <= 1e-9, fmt("%.0f contexts, max |emission - q| = %.3g", checked, worst)};
}

// ---------------------------------------------------------------------------
// 2. Monte Carlo exactness of vanilla chain decoding against the exact
// sequence distribution (products of table rows).

Outcome monte_carlo_exactness() {
  const std::size_t vocab = 4, length = 3, samples = 500000;
  auto target = tabular(vocab, 1, 21);
  auto drafter_model = tabular(vocab, 1, 22);
  TargetDrafter drafter(drafter_model);
  DecodeOptions opt;
  opt.mode = DecodeMode::kVanilla;
  opt.mask = TreeMask::chain(length);
  opt.candidates = CandidateMode::kSampled;

  std::vector<double> exact(64, 0.0);
  for (std::size_t code = 0; code < 64; ++code) {
    std::vector<TokenId> seq{static_cast<TokenId>(code / 16), static_cast<TokenId>(code / 4 % 4),
                             static_cast<TokenId>(code % 4)};
    double prob = 1.0;
    for (std::size_t k = 0; k < length; ++k) {
      const auto prefix = std::span<const TokenId>(seq).first(k);
      prob *= target->eval(prefix, position_of(k, 8)).dist[seq[k]];
    }
    exact[code] = prob;
  }
  std::vector<double> counts(64, 0.0);
  for (std::size_t i = 0; i < samples; ++i) {
    RngStream rng(mix64(7) + i);
    const auto r = decode_sequence(*target, &drafter, opt, length, rng);
    ++counts[r.tokens[0] * 16 + r.tokens[1] * 4 + r.tokens[2]];
  }
  double l1 = 0.0;
  for (std::size_t c = 0; c < 64; ++c) l1 += std::fabs(counts[c] / samples - exact[c]);
  const double tvd_value = 0.5 * l1;

  // The library oracle on the same setup must agree.
  const auto lib = mc_distribution_test(*target, &drafter, opt, samples, length, 7);
  const bool ok = tvd_value <= 0.01 && std::fabs(lib.tvd - tvd_value) < 1e-12;
  return {ok, fmt("TVD %.5f over %.0f decodes (limit 0.01, 3-sigma bound %.5f)", tvd_value,
                  static_cast<double>(samples), lib.bound)};
}

// ---------------------------------------------------------------------------
// 3. Disabling relaxation by thresholds or by budget reproduces vanilla.

Outcome equivalence_switches() {
  auto grid = std::make_shared<GridWorldModel>(default_gridworld_spec());
  LinearDrafter grid_drafter(
      mode_seeking_drafter(default_gridworld_spec(), kDefaultRankDecay, kDefaultOffClusterBoost));
  auto tab = tabular(8, 2, 31);
  TargetDrafter tab_drafter(tabular(8, 1, 32));

  DecodeOptions vanilla;
  vanilla.mode = DecodeMode::kVanilla;
  DecodeOptions thresholds;
  thresholds.relax.tau_pos = 1.01;
  thresholds.relax.tau_seq = 1.01;
  DecodeOptions budget;
  budget.relax.delta = 0.0;

  std::size_t mismatches = 0, runs = 0;
  for (int family = 0; family < 2; ++family) {
    const TargetModel& target = family ? static_cast<const TargetModel&>(*tab) : *grid;
    const Drafter& drafter = family ? static_cast<const Drafter&>(tab_drafter) : grid_drafter;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      RngStream rv(seed);
      const auto ref = decode_sequence(target, &drafter, vanilla, 64, rv).tokens;
      for (const DecodeOptions* opt : {&thresholds, &budget}) {
        RngStream rc(seed);
        mismatches += decode_sequence(target, &drafter, *opt, 64, rc).tokens != ref;
        ++runs;
      }
    }
  }
  return {mismatches == 0, fmt("%.0f of %.0f cascade runs differ from vanilla",
                               static_cast<double>(mismatches), static_cast<double>(runs))};
}

// ---------------------------------------------------------------------------
// 4. Per-call budget and transfer invariant of every relaxed distribution.

Outcome budget_soundness() {
  GridWorldModel target(default_gridworld_spec());
  LinearDrafter drafter(
      mode_seeking_drafter(default_gridworld_spec(), kDefaultRankDecay, kDefaultOffClusterBoost));
  DecodeOptions opt;
  opt.relax.delta = 0.5;
  double max_consumed = 0.0, max_transfer_err = 0.0;
  std::size_t calls = 0, relaxed = 0;
  opt.on_verify = [&](const DraftTree&, const VerifyOutcome& v) {
    ++calls;
    max_consumed = std::max(max_consumed, v.tvd_consumed);
    for (const RelaxedDist& rd : v.relaxations) {
      const ProbDist m = rd.materialize();
      double l1 = 0.0;
      for (std::size_t x = 0; x < m.size(); ++x) l1 += std::fabs(m[x] - rd.base_q[x]);
      max_transfer_err = std::max(max_transfer_err, std::fabs(0.5 * l1 - rd.added_mass));
      ++relaxed;
    }
  };
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RngStream rng(seed);
    decode_sequence(target, &drafter, opt, 64, rng);
  }
  const bool ok = max_consumed <= 0.5 + kProbTolerance && max_transfer_err <= 1e-12;
  return {ok, fmt("%.0f calls, max consumed %.6f, %.0f relaxed dists, max |TVD - added| %.3g",
                  static_cast<double>(calls), max_consumed, static_cast<double>(relaxed),
                  max_transfer_err)};
}

// ---------------------------------------------------------------------------
// 5. Relaxation raises acceptance length and the cost-model speedup.

Outcome redundancy_gain() {
  GridWorldModel target(default_gridworld_spec());
  LinearDrafter drafter(
      mode_seeking_drafter(default_gridworld_spec(), kDefaultRankDecay, kDefaultOffClusterBoost));
  const auto seeds = parse_seeds("0..199");
  DecodeOptions vanilla;
  vanilla.mode = DecodeMode::kVanilla;
  DecodeOptions cascade;
  cascade.relax.tau_pos = 0.85;
  cascade.relax.tau_seq = 0.5;
  const auto v = run_experiment(target, &drafter, vanilla, seeds, 0).aggregate;
  const auto c = run_experiment(target, &drafter, cascade, seeds, 0).aggregate;
  const double ratio = c.mean_alpha / v.mean_alpha;
  const bool ok = ratio >= 1.2 && c.speedup_proxy > v.speedup_proxy;
  return {ok, fmt("alpha %.3f -> %.3f (x%.3f), speedup %.3f", v.mean_alpha, c.mean_alpha, ratio,
                  v.speedup_proxy) +
                  fmt(" -> %.3f, perTokenTVD %.4f", c.speedup_proxy, c.per_token_tvd)};
}

// ---------------------------------------------------------------------------
// 6. Drafter training.

// Independent evaluation of the training objective (weights ignored: every
// position counts once for both terms).
double unweighted_loss(const LinearDrafterSpec& d, std::span<const TrainSample> batch) {
  const std::size_t dim = d.context_dim();
  double total = 0.0;
  for (const TrainSample& s : batch) {
    std::vector<double> z(d.bias.begin(), d.bias.end());
    auto add_column = [&](std::size_t j) {
      for (std::size_t x = 0; x < d.vocab; ++x) z[x] += d.weights[x * dim + j];
    };
    if (s.last_token) add_column(*s.last_token);
    add_column(d.vocab + static_cast<std::size_t>(s.pos.row));
    add_column(d.vocab + static_cast<std::size_t>(d.grid_side + s.pos.col));
    const double zmax = *std::max_element(z.begin(), z.end());
    double norm = 0.0;
    for (double v : z) norm += std::exp(v - zmax);
    const double lse = zmax + std::log(norm);
    for (std::size_t x = 0; x < d.vocab; ++x) total -= s.target_dist[x] * (z[x] - lse);
    total -= z[s.ground_truth] - lse;
  }
  return total / static_cast<double>(batch.size());
}

Outcome training() {
  GridWorldModel target(default_gridworld_spec());
  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal(0.0, 0.5);

  // (a) gradient check on random parameters and random rollout batches.
  double worst_rel = 0.0;
  for (int b = 0; b < 20; ++b) {
    auto spec = LinearDrafterSpec::zeros(32, 8);
    for (auto& w : spec.weights) w = normal(gen);
    for (auto& w : spec.bias) w = normal(gen);
    const auto set = build_sample_set(target, 1, 16, 100 + b, 2.0, 0.5);
    const auto lg = loss_and_grad(spec, set.samples, set.weights, 1.0);
    // Probe a random subset of coordinates, always including the bias.
    std::vector<std::pair<double*, double>> probes;
    for (std::size_t x = 0; x < spec.bias.size(); ++x) probes.push_back({&spec.bias[x], lg.grad_bias[x]});
    std::uniform_int_distribution<std::size_t> pick(0, spec.weights.size() - 1);
    for (int k = 0; k < 64; ++k) {
      const std::size_t i = pick(gen);
      probes.push_back({&spec.weights[i], lg.grad_weights[i]});
    }
    const double eps = 1e-5;
    for (auto [param, analytic] : probes) {
      const double saved = *param;
      *param = saved + eps;
      const double up = loss_and_grad(spec, set.samples, set.weights, 1.0).loss;
      *param = saved - eps;
      const double down = loss_and_grad(spec, set.samples, set.weights, 1.0).loss;
      *param = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double scale = std::max({std::fabs(numeric), std::fabs(analytic), 1e-6});
      worst_rel = std::max(worst_rel, std::fabs(numeric - analytic) / scale);
    }
  }

  // (b) up-weighting convergent positions lowers their held-out KL.
  TrainConfig cfg;
  cfg.seed = 3;
  cfg.c = 1.0;
  const auto base = train_drafter(target, cfg);
  cfg.c = 2.0;
  const auto weighted = train_drafter(target, cfg);
  const double kl1 = heldout_convergent_kl(target, base.drafter, 16, 999, cfg.tau_seq_train);
  const double kl2 = heldout_convergent_kl(target, weighted.drafter, 16, 999, cfg.tau_seq_train);

  // (c) c = 1 reduces to the unweighted objective.
  const auto set = build_sample_set(target, 4, 0, 11, 1.0, 0.5);
  double worst_loss = 0.0;
  for (const auto* spec : {&base.drafter, &weighted.drafter}) {
    const double lib = loss_and_grad(*spec, set.samples, set.weights, 1.0).loss;
    worst_loss = std::max(worst_loss, std::fabs(lib - unweighted_loss(*spec, set.samples)));
  }

  const bool ok = worst_rel <= 1e-4 && kl2 < kl1 && worst_loss <= 1e-12;
  return {ok, fmt("grad rel err %.2g, held-out KL c=1 %.5f vs c=2 %.5f, c=1 loss diff %.2g",
                  worst_rel, kl1, kl2, worst_loss)};
}

// ---------------------------------------------------------------------------
// 7. Heatmap block structure.

Outcome heatmap_structure() {
  GridWorldModel target(default_gridworld_spec());
  LinearDrafter drafter(
      mode_seeking_drafter(default_gridworld_spec(), kDefaultRankDecay, kDefaultOffClusterBoost));
  RngStream rng(0);
  const auto tokens = decode_sequence(target, &drafter, DecodeOptions{}, 64, rng).tokens;
  const auto hm = similarity_heatmap(target, tokens, 0, 8);
  double within = 0.0, cross = 0.0;
  std::size_t nw = 0, nc = 0;
  for (std::size_t i = 0; i < hm.cells.size(); ++i) {
    for (std::size_t j = 0; j < hm.cells.size(); ++j) {
      if (i == j) continue;
      if (target.region_of(hm.cells[i]) == target.region_of(hm.cells[j])) {
        within += hm.at(i, j);
        ++nw;
      } else {
        cross += hm.at(i, j);
        ++nc;
      }
    }
  }
  within /= static_cast<double>(nw);
  cross /= static_cast<double>(nc);
  return {within - cross >= 0.2,
          fmt("within-region %.4f, cross-region %.4f, gap %.4f", within, cross, within - cross)};
}

// ---------------------------------------------------------------------------
// 8. CLI replay determinism.

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome replay(const std::string& cli, const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string w = work.string();
  auto run = [&](const std::string& args, const std::string& log) {
    const std::string cmd = "\"" + cli + "\" " + args + " > \"" + w + "/" + log + "\" 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  // Each command runs twice into separate run directories.
  std::vector<std::string> failures;
  std::size_t compared = 0;
  for (int r = 0; r < 2; ++r) {
    const std::string d = w + "/run" + std::to_string(r);
    fs::create_directories(d);
    const std::vector<std::string> cmds = {
        "gen gridworld --out " + d + "/grid.json",
        "gen tabular --vocab 4 --order 2 --seed 9 --out " + d + "/tab.json",
        "gen drafter --model " + d + "/grid.json --out " + d + "/drafter.json",
        "decode --model " + d + "/grid.json --drafter " + d +
            "/drafter.json --mode cascade --tree 4,2,2,1,1 --tau-pos 0.85 --tau-seq 0.5"
            " --tvd-budget 0.5 --seeds 0..19 --out " + d + "/metrics.jsonl --trace " + d +
            "/trace.jsonl --heatmap " + d + "/hm.csv",
        "decode --model " + d + "/tab.json --mode vanilla --seeds 0..9 --len 20 --out " + d +
            "/tab_metrics.jsonl",
        "train --model " + d + "/grid.json --c 2 --tau-seq-train 0.5 --epochs 20 --lr 0.5"
            " --seed 1 --sequences 4 --out " + d + "/trained.json",
        "oracle --model " + d + "/tab.json --mode vanilla --len 2 --samples 20000 --seed 4",
    };
    for (std::size_t i = 0; i < cmds.size(); ++i) {
      const std::string log = "run" + std::to_string(r) + "/stdout" + std::to_string(i) + ".txt";
      if (!run(cmds[i], log)) failures.push_back("command failed: " + cmds[i]);
    }
  }
  for (const char* name :
       {"grid.json", "tab.json", "drafter.json", "metrics.jsonl", "trace.jsonl", "hm.csv",
        "tab_metrics.jsonl", "trained.json", "stdout3.txt", "stdout4.txt", "stdout5.txt",
        "stdout6.txt"}) {
    const auto a = work / "run0" / name;
    const auto b = work / "run1" / name;
    if (!fs::exists(a) || fs::file_size(a) == 0) {
      failures.push_back(std::string("missing output ") + name);
      continue;
    }
    if (slurp(a) != slurp(b)) failures.push_back(std::string("differs: ") + name);
    ++compared;
  }
  if (!failures.empty()) return {false, failures.front()};
  return {true, fmt("%.0f outputs byte-identical across two runs", static_cast<double>(compared))};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <specrelax-cli> <work-dir>\n");
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path work = argv[2];

  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "exactness-analytic", 1.0, analytic_exactness},
      {2, "exactness-monte-carlo", 60.0, monte_carlo_exactness},
      {3, "equivalence-switches", 30.0, equivalence_switches},
      {4, "budget-soundness", 60.0, budget_soundness},
      {5, "redundancy-gain", 120.0, redundancy_gain},
      {6, "training", 120.0, training},
      {7, "heatmap-structure", 10.0, heatmap_structure},
      {8, "replay-determinism", 10.0, [&] { return replay(cli, work); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s %d %s (%.2f s, limit %.0f s): %s%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                secs, c.limit_seconds, o.detail.c_str(), in_time ? "" : " [over time limit]");
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
