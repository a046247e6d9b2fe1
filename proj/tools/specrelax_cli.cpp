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

// Command-line front end: decode, train, oracle and gen subcommands.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "specrelax/harness.hpp"
#include "specrelax/kernels.hpp"
#include "specrelax/model_io.hpp"

using namespace specrelax;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::kIo, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Raw flag values; applied on top of the config file only when given.
struct DecodeFlags {
  std::string config, model, drafter, mode, tree, seeds, out, trace, heatmap, heatmap_rows;
  std::string candidates, sibling_mode;
  double tau_pos = 0, tau_seq = 0, budget = 0, kappa = 0;
  std::size_t len = 0;
  bool no_interchange = false, no_convergence = false;
};

struct TrainFlags {
  std::string config, model, out;
  double c = 0, tau_seq_train = 0, lr = 0;
  std::size_t epochs = 0, sequences = 0;
  std::uint64_t seed = 0;
};

bool given(CLI::App* app, const char* name) { return app->count(name) > 0; }

ExperimentConfig decode_config(CLI::App* app, const DecodeFlags& f) {
  ExperimentConfig cfg;
  cfg.seeds = {0};
  if (!f.config.empty()) cfg = parse_experiment_config(read_text(f.config), cfg);
  if (given(app, "--model")) cfg.model_path = f.model;
  if (given(app, "--drafter")) cfg.drafter_path = f.drafter;
  if (given(app, "--mode")) cfg.decode.mode = parse_decode_mode(f.mode);
  if (given(app, "--tree")) cfg.decode.mask = TreeMask::parse(f.tree);
  if (given(app, "--tau-pos")) cfg.decode.relax.tau_pos = f.tau_pos;
  if (given(app, "--tau-seq")) cfg.decode.relax.tau_seq = f.tau_seq;
  if (given(app, "--tvd-budget")) cfg.decode.relax.delta = f.budget;
  if (given(app, "--kappa")) cfg.decode.kappa = f.kappa;
  if (given(app, "--candidates")) cfg.decode.candidates = parse_candidate_mode(f.candidates);
  if (given(app, "--sibling-mode")) cfg.decode.relax.sibling_mode = parse_sibling_mode(f.sibling_mode);
  if (given(app, "--no-interchange")) cfg.decode.relax.enable_interchange = false;
  if (given(app, "--no-convergence")) cfg.decode.relax.enable_convergence = false;
  if (given(app, "--seeds")) cfg.seeds = parse_seeds(f.seeds);
  if (given(app, "--len")) cfg.length = f.len;
  if (given(app, "--out")) cfg.metrics_out = f.out;
  if (given(app, "--trace")) cfg.trace_out = f.trace;
  if (given(app, "--heatmap")) cfg.heatmap_out = f.heatmap;
  if (given(app, "--heatmap-rows")) {
    nlohmann::json j{{"heatmap-rows", f.heatmap_rows}};
    cfg = parse_experiment_config(j.dump(), cfg);
  }
  return cfg;
}

ExperimentConfig train_config(CLI::App* app, const TrainFlags& f) {
  ExperimentConfig cfg;
  if (!f.config.empty()) cfg = parse_experiment_config(read_text(f.config), cfg);
  if (given(app, "--model")) cfg.model_path = f.model;
  if (given(app, "--c")) cfg.train.c = f.c;
  if (given(app, "--tau-seq-train")) cfg.train.tau_seq_train = f.tau_seq_train;
  if (given(app, "--epochs")) cfg.train.epochs = f.epochs;
  if (given(app, "--lr")) cfg.train.learning_rate = f.lr;
  if (given(app, "--seed")) cfg.train.seed = f.seed;
  if (given(app, "--sequences")) cfg.train.sequences = f.sequences;
  if (given(app, "--out")) cfg.metrics_out = f.out;
  return cfg;
}

void print_summary(const Metrics& m) {
  std::printf("meanAlpha=%.4f targetCalls=%llu drafterCalls=%llu speedupProxy=%.4f "
              "accumulatedTVD=%.4f perTokenTVD=%.5f tokensEmitted=%llu\n",
              m.mean_alpha, static_cast<unsigned long long>(m.target_calls),
              static_cast<unsigned long long>(m.drafter_calls), m.speedup_proxy,
              m.accumulated_tvd, m.per_token_tvd,
              static_cast<unsigned long long>(m.tokens_emitted));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speculative decoding with similarity-relaxed tree verification"};
  app.require_subcommand(1);
  std::string kernels_name;
  app.add_option("--kernels", kernels_name, "Kernel backend: scalar, avx2 or neon");

  // decode
  DecodeFlags df;
  auto* dec = app.add_subcommand("decode", "Decode one sequence per seed and report metrics");
  dec->add_option("--config", df.config, "JSON config; flags override its values");
  dec->add_option("--model", df.model, "Target model file");
  dec->add_option("--drafter", df.drafter, "Drafter model file (default: mirror the target)");
  dec->add_option("--mode", df.mode, "ar, vanilla or cascade");
  dec->add_option("--tree", df.tree, "Per-level widths, e.g. 4,2,2,1,1");
  dec->add_option("--tau-pos", df.tau_pos, "Sibling cosine threshold");
  dec->add_option("--tau-seq", df.tau_seq, "Parent/child cosine threshold");
  dec->add_option("--tvd-budget", df.budget, "TVD budget per verify call");
  dec->add_option("--kappa", df.kappa, "Drafter cost relative to one target pass");
  dec->add_option("--candidates", df.candidates, "topw or sampled");
  dec->add_option("--sibling-mode", df.sibling_mode, "literal or residual-adjusted");
  dec->add_flag("--no-interchange", df.no_interchange, "Disable the sibling set");
  dec->add_flag("--no-convergence", df.no_convergence, "Disable the parent/child set");
  dec->add_option("--seeds", df.seeds, "Seed list: 0..199 or 1,2,3");
  dec->add_option("--len", df.len, "Tokens per sequence (default: full grid)");
  dec->add_option("--out", df.out, "Metrics JSONL output");
  dec->add_option("--trace", df.trace, "Per-decision trace JSONL output");
  dec->add_option("--heatmap", df.heatmap, "Similarity heatmap CSV for the first seed");
  dec->add_option("--heatmap-rows", df.heatmap_rows, "Inclusive grid rows, e.g. 0..7");

  // train
  TrainFlags tf;
  auto* tr = app.add_subcommand("train", "Train a linear drafter against a target model");
  tr->add_option("--config", tf.config, "JSON config; flags override its values");
  tr->add_option("--model", tf.model, "Target model file");
  tr->add_option("--c", tf.c, "Weight on convergent positions");
  tr->add_option("--tau-seq-train", tf.tau_seq_train, "Convergence threshold");
  tr->add_option("--epochs", tf.epochs, "Full-batch gradient steps");
  tr->add_option("--lr", tf.lr, "Learning rate");
  tr->add_option("--seed", tf.seed, "Rollout seed");
  tr->add_option("--sequences", tf.sequences, "Number of target rollouts");
  tr->add_option("--out", tf.out, "Drafter output file")->required();

  // oracle
  std::string o_model, o_drafter, o_mode = "vanilla", o_tree, o_candidates = "sampled",
                                   o_sibling = "literal";
  std::size_t o_len = 3, o_samples = 500000;
  std::uint64_t o_seed = 0;
  double o_budget = 0.5;
  auto* orc = app.add_subcommand("oracle", "Compare decoded samples with the exact distribution");
  orc->add_option("--model", o_model, "Target model file")->required();
  orc->add_option("--drafter", o_drafter, "Drafter model file (default: mirror the target)");
  orc->add_option("--mode", o_mode, "ar, vanilla or cascade");
  orc->add_option("--len", o_len, "Sequence length");
  orc->add_option("--samples", o_samples, "Number of decodes");
  orc->add_option("--tree", o_tree, "Tree widths (default: chain of --len)");
  orc->add_option("--candidates", o_candidates, "topw or sampled");
  orc->add_option("--sibling-mode", o_sibling, "literal or residual-adjusted");
  orc->add_option("--tvd-budget", o_budget, "TVD budget for cascade mode");
  orc->add_option("--seed", o_seed, "Base seed");

  // gen
  auto* gen = app.add_subcommand("gen", "Write built-in model files");
  gen->require_subcommand(1);
  std::string g_out;
  auto* gen_grid = gen->add_subcommand("gridworld", "Default grid-world target");
  gen_grid->add_option("--out", g_out, "Output file")->required();
  std::size_t g_vocab = 4, g_order = 1, g_dim = 4;
  std::uint64_t g_seed = 0;
  int g_side = 8;
  auto* gen_tab = gen->add_subcommand("tabular", "Random order-k tabular target");
  gen_tab->add_option("--out", g_out, "Output file")->required();
  gen_tab->add_option("--vocab", g_vocab, "Vocabulary size");
  gen_tab->add_option("--order", g_order, "Context length");
  gen_tab->add_option("--dim", g_dim, "Feature dimension");
  gen_tab->add_option("--seed", g_seed, "Table seed");
  gen_tab->add_option("--grid", g_side, "Grid side used for positions");
  double g_decay = kDefaultRankDecay, g_boost = kDefaultOffClusterBoost;
  std::string g_model;
  auto* gen_dr = gen->add_subcommand("drafter", "Mode-seeking linear drafter for a grid world");
  gen_dr->add_option("--out", g_out, "Output file")->required();
  gen_dr->add_option("--model", g_model, "Grid-world target file (default: built-in)");
  gen_dr->add_option("--rank-decay", g_decay, "Logit penalty per in-cluster rank");
  gen_dr->add_option("--off-cluster-boost", g_boost, "Logit shift for off-cluster tokens");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!kernels_name.empty()) {
      const auto backend = kernels::parse_backend(kernels_name);
      if (!backend || !kernels::set_backend(*backend)) {
        std::fprintf(stderr, "error: kernel backend '%s' is not available\n", kernels_name.c_str());
        return 2;
      }
    }

    if (*dec) {
      const auto cfg = decode_config(dec, df);
      const auto result = run_experiment(cfg);
      print_summary(result.aggregate);
    } else if (*tr) {
      const auto cfg = train_config(tr, tf);
      if (cfg.model_path.empty()) fail(ErrorKind::kInvalidArgument, "--model is required");
      const auto target = make_target(load_model_spec(cfg.model_path));
      const auto report = train_drafter(*target, cfg.train);
      save_model_spec(cfg.metrics_out, report.drafter);
      std::printf("loss %.6f -> %.6f over %zu epochs\n", report.loss_history.front(),
                  report.loss_history.back(), cfg.train.epochs);
    } else if (*orc) {
      const auto target = make_target(load_model_spec(o_model));
      const auto drafter = o_drafter.empty() ? std::make_shared<TargetDrafter>(target)
                                             : make_drafter(load_model_spec(o_drafter));
      DecodeOptions opt;
      opt.mode = parse_decode_mode(o_mode);
      opt.mask = o_tree.empty() ? TreeMask::chain(o_len) : TreeMask::parse(o_tree);
      opt.candidates = parse_candidate_mode(o_candidates);
      opt.relax.sibling_mode = parse_sibling_mode(o_sibling);
      opt.relax.delta = o_budget;
      const auto r = mc_distribution_test(*target, drafter.get(), opt, o_samples, o_len, o_seed);
      nlohmann::ordered_json j{{"tvd", r.tvd}, {"bound", r.bound}, {"samples", r.samples},
                               {"pass", r.pass}};
      std::printf("%s\n", j.dump().c_str());
      return r.pass ? 0 : 1;
    } else if (*gen_grid) {
      save_model_spec(g_out, default_gridworld_spec());
    } else if (*gen_tab) {
      save_model_spec(g_out, random_tabular_spec(g_vocab, g_order, g_dim, g_seed, g_side));
    } else if (*gen_dr) {
      GridWorldSpec grid = default_gridworld_spec();
      if (!g_model.empty()) {
        auto spec = load_model_spec(g_model);
        if (!std::holds_alternative<GridWorldSpec>(spec)) {
          fail(ErrorKind::kInvalidArgument, "--model must be a grid-world file");
        }
        grid = std::get<GridWorldSpec>(std::move(spec));
      }
      save_model_spec(g_out, mode_seeking_drafter(grid, g_decay, g_boost));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
