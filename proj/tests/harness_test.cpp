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

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "specrelax/harness.hpp"
#include "specrelax/model_io.hpp"
#include "test_util.hpp"

namespace specrelax {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("specrelax_harness_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

TEST(ParseSeeds, Forms) {
  EXPECT_EQ(parse_seeds("0..3"), (std::vector<std::uint64_t>{0, 1, 2, 3}));
  EXPECT_EQ(parse_seeds("5,2,9"), (std::vector<std::uint64_t>{5, 2, 9}));
  EXPECT_EQ(parse_seeds("7"), std::vector<std::uint64_t>{7});
  EXPECT_EQ(parse_seeds("4..4"), std::vector<std::uint64_t>{4});
  EXPECT_THROW(parse_seeds("3..1"), Error);
  EXPECT_THROW(parse_seeds("a"), Error);
  EXPECT_THROW(parse_seeds(""), Error);
  EXPECT_THROW(parse_seeds("1,,2"), Error);
}

TEST(ExperimentConfig, ParsesKnownKeys) {
  const auto cfg = parse_experiment_config(R"({
    "model": "m.json", "drafter": "d.json", "mode": "vanilla", "tree": "2,1",
    "tau-pos": 0.9, "tau-seq": 0.4, "tvd-budget": 0.25, "seeds": "0..9", "out": "o.jsonl",
    "heatmap-rows": "2..3", "len": 12, "kappa": 0.2, "candidates": "sampled",
    "sibling-mode": "residual-adjusted", "interchange": false, "c": 3, "epochs": 7})");
  EXPECT_EQ(cfg.model_path, "m.json");
  EXPECT_EQ(cfg.drafter_path, "d.json");
  EXPECT_EQ(cfg.decode.mode, DecodeMode::kVanilla);
  EXPECT_EQ(cfg.decode.mask, TreeMask::parse("2,1"));
  EXPECT_EQ(cfg.decode.relax.tau_pos, 0.9);
  EXPECT_EQ(cfg.decode.relax.tau_seq, 0.4);
  EXPECT_EQ(cfg.decode.relax.delta, 0.25);
  EXPECT_EQ(cfg.seeds.size(), 10u);
  EXPECT_EQ(cfg.heatmap_row_begin, 2);
  EXPECT_EQ(cfg.heatmap_row_end, 4);
  EXPECT_EQ(cfg.length, 12u);
  EXPECT_EQ(cfg.decode.kappa, 0.2);
  EXPECT_EQ(cfg.decode.candidates, CandidateMode::kSampled);
  EXPECT_EQ(cfg.decode.relax.sibling_mode, SiblingMode::kResidualAdjusted);
  EXPECT_FALSE(cfg.decode.relax.enable_interchange);
  EXPECT_TRUE(cfg.decode.relax.enable_convergence);
  EXPECT_EQ(cfg.train.c, 3.0);
  EXPECT_EQ(cfg.train.epochs, 7u);
}

TEST(ExperimentConfig, SeedArraysAndDefaults) {
  EXPECT_EQ(parse_experiment_config(R"({"seeds": [3, 1]})").seeds,
            (std::vector<std::uint64_t>{3, 1}));
  EXPECT_EQ(parse_experiment_config(R"({"seeds": 4})").seeds, std::vector<std::uint64_t>{4});
  const auto cfg = parse_experiment_config("{}");
  EXPECT_EQ(cfg.decode.mode, DecodeMode::kCascade);
  EXPECT_EQ(cfg.decode.mask, default_tree_mask());
  EXPECT_EQ(cfg.decode.relax.tau_pos, 0.85);
  EXPECT_EQ(cfg.decode.relax.tau_seq, 0.5);
  EXPECT_EQ(cfg.decode.relax.delta, 0.5);
}

TEST(ExperimentConfig, Errors) {
  auto kind = [](const char* text) -> std::optional<ErrorKind> {
    try {
      parse_experiment_config(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return std::nullopt;
  };
  EXPECT_EQ(kind(R"({"bogus": 1})"), ErrorKind::kFormat);
  EXPECT_EQ(kind(R"({"tau-pos": "high"})"), ErrorKind::kFormat);
  EXPECT_EQ(kind("[1]"), ErrorKind::kFormat);
  EXPECT_EQ(kind("{"), ErrorKind::kFormat);
  EXPECT_EQ(kind(R"({"mode": "beam"})"), ErrorKind::kInvalidArgument);

  ExperimentConfig cfg;
  cfg.model_path = "/nonexistent/model.json";
  cfg.seeds = {0};
  try {
    cfg.validate();
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(RunExperiment, AutoregressiveBaseline) {
  TabularModel target(random_tabular_spec(3, 1, 3, 0));
  DecodeOptions opt;
  opt.mode = DecodeMode::kAr;
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  const auto res = run_experiment(target, nullptr, opt, seeds, 10);
  EXPECT_EQ(res.aggregate.mean_alpha, 1.0);
  EXPECT_EQ(res.aggregate.speedup_proxy, 1.0);
  EXPECT_EQ(res.aggregate.target_calls, 30u);
  EXPECT_EQ(res.aggregate.drafter_calls, 0u);
}

TEST(RunExperiment, PerfectDrafterChainOfFive) {
  auto target = std::make_shared<TabularModel>(random_tabular_spec(4, 1, 3, 1));
  TargetDrafter drafter(target);
  DecodeOptions opt;
  opt.mode = DecodeMode::kVanilla;
  opt.mask = TreeMask::chain(5);
  const std::vector<std::uint64_t> seeds{0, 1, 2, 3};
  const auto res = run_experiment(*target, &drafter, opt, seeds, 60);
  EXPECT_DOUBLE_EQ(res.aggregate.mean_alpha, 5.0);
  EXPECT_EQ(res.aggregate.target_calls, 4u * 12u);
}

TEST(RunExperiment, ZeroBudgetCascadeMatchesVanilla) {
  GridWorldModel target(default_gridworld_spec());
  LinearDrafter drafter(mode_seeking_drafter(default_gridworld_spec(), 4.0, 1.0));
  DecodeOptions van;
  van.mode = DecodeMode::kVanilla;
  DecodeOptions cas;
  cas.relax.delta = 0.0;
  const auto seeds = parse_seeds("0..19");
  const auto a = run_experiment(target, &drafter, van, seeds, 0);
  const auto b = run_experiment(target, &drafter, cas, seeds, 0);
  EXPECT_EQ(a.aggregate, b.aggregate);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    EXPECT_EQ(a.runs[i].result.tokens, b.runs[i].result.tokens);
  }
}

TEST(RunExperiment, ThreadCountDoesNotChangeResults) {
  GridWorldModel target(default_gridworld_spec());
  LinearDrafter drafter(mode_seeking_drafter(default_gridworld_spec(), 4.0, 1.0));
  DecodeOptions opt;
  const auto seeds = parse_seeds("10..25");
  const auto one = run_experiment(target, &drafter, opt, seeds, 0, 1);
  const auto many = run_experiment(target, &drafter, opt, seeds, 0, 4);
  EXPECT_EQ(metrics_jsonl(one), metrics_jsonl(many));
}

TEST(RunExperiment, PropagatesErrors) {
  GridWorldModel target(default_gridworld_spec());
  DecodeOptions opt;
  const std::vector<std::uint64_t> seeds{0, 1};
  EXPECT_THROW(run_experiment(target, nullptr, opt, seeds, 0, 2), Error);
  EXPECT_THROW(run_experiment(target, nullptr, opt, std::vector<std::uint64_t>{}, 0), Error);
}

TEST(RunExperiment, WritesOutputsFromConfig) {
  TempDir dir;
  const auto model = dir.path() / "grid.json";
  const auto drafter = dir.path() / "drafter.json";
  save_model_spec(model, default_gridworld_spec());
  save_model_spec(drafter, mode_seeking_drafter(default_gridworld_spec(), 4.0, 1.0));
  ExperimentConfig cfg;
  cfg.model_path = model.string();
  cfg.drafter_path = drafter.string();
  cfg.seeds = {0, 1, 2};
  cfg.metrics_out = (dir.path() / "m.jsonl").string();
  cfg.trace_out = (dir.path() / "t.jsonl").string();
  cfg.heatmap_out = (dir.path() / "h.csv").string();
  cfg.heatmap_row_begin = 1;
  cfg.heatmap_row_end = 3;
  const auto res = run_experiment(cfg);

  std::istringstream metrics(slurp(cfg.metrics_out));
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(metrics, line)) rows.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].at("kind"), "seed");
  EXPECT_EQ(rows[2].at("seed"), 2);
  EXPECT_EQ(rows[3].at("kind"), "aggregate");
  EXPECT_EQ(rows[3].at("seeds"), 3);
  EXPECT_EQ(metrics_from_json(rows[3].dump()), res.aggregate);

  EXPECT_FALSE(slurp(cfg.trace_out).empty());
  const std::string csv = slurp(cfg.heatmap_out);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 17);
  EXPECT_EQ(csv.rfind("cell,r1c0,r1c1", 0), 0u);
}

TEST(MonteCarlo, AutoregressiveMatchesEnumeration) {
  auto target = std::make_shared<TabularModel>(random_tabular_spec(2, 1, 2, 4));
  DecodeOptions opt;
  opt.mode = DecodeMode::kAr;
  const auto r = mc_distribution_test(*target, nullptr, opt, 100000, 2, 1);
  EXPECT_LE(r.tvd, 0.01);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.bound, 3.0 * std::sqrt(4.0 / 100000.0), 1e-15);
}

TEST(MonteCarlo, VanillaChainMatchesEnumeration) {
  auto target = std::make_shared<TabularModel>(random_tabular_spec(3, 1, 2, 5));
  auto other = std::make_shared<TabularModel>(random_tabular_spec(3, 1, 2, 6));
  TargetDrafter drafter(other);
  DecodeOptions opt;
  opt.mode = DecodeMode::kVanilla;
  opt.mask = TreeMask::chain(3);
  opt.candidates = CandidateMode::kSampled;
  const auto r = mc_distribution_test(*target, &drafter, opt, 60000, 3, 2);
  EXPECT_TRUE(r.pass) << r.tvd << " > " << r.bound;
}

TEST(MonteCarlo, TopCandidateChainIsBiased) {
  // A deterministic draft is not a sample from p, so the ratio test no longer
  // reproduces q.
  auto target = std::make_shared<TabularModel>(random_tabular_spec(3, 1, 2, 5));
  auto other = std::make_shared<TabularModel>(random_tabular_spec(3, 1, 2, 6));
  TargetDrafter drafter(other);
  DecodeOptions opt;
  opt.mode = DecodeMode::kVanilla;
  opt.mask = TreeMask::chain(3);
  const auto r = mc_distribution_test(*target, &drafter, opt, 20000, 3, 2);
  EXPECT_FALSE(r.pass);
}

TEST(MonteCarlo, SampledTreeCascadeWithoutRelaxationMatchesEnumeration) {
  auto target = std::make_shared<TabularModel>(random_tabular_spec(3, 1, 2, 7));
  auto other = std::make_shared<TabularModel>(random_tabular_spec(3, 1, 2, 8));
  TargetDrafter drafter(other);
  DecodeOptions opt;
  opt.mask = TreeMask::parse("2,2");
  opt.candidates = CandidateMode::kSampled;
  opt.relax.delta = 0.0;
  opt.relax.sibling_mode = SiblingMode::kResidualAdjusted;
  const auto r = mc_distribution_test(*target, &drafter, opt, 60000, 3, 3);
  EXPECT_TRUE(r.pass) << r.tvd << " > " << r.bound;
}

TEST(Heatmap, IdenticalFeaturesGiveAllOnes) {
  testing::ConstantTarget target(ProbDist({0.5, 0.5}), {FeatureVec({1, 2}), FeatureVec({2, 4})},
                                 FeatureVec({3, 6}), 4);
  const std::vector<TokenId> tokens(16, 1);
  const auto hm = similarity_heatmap(target, tokens, 0, 4);
  ASSERT_EQ(hm.cells.size(), 16u);
  for (double v : hm.values) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Heatmap, GridWorldBlockStructure) {
  GridWorldModel target(default_gridworld_spec());
  RngStream rng(3);
  DecodeOptions opt;
  opt.mode = DecodeMode::kAr;
  const auto tokens = decode_sequence(target, nullptr, opt, 64, rng).tokens;
  const auto hm = similarity_heatmap(target, tokens, 0, 8);
  ASSERT_EQ(hm.cells.size(), 64u);
  for (std::size_t i = 0; i < 64; ++i) {
    for (std::size_t j = 0; j < 64; ++j) {
      const bool same = target.region_of(hm.cells[i]) == target.region_of(hm.cells[j]);
      if (same) {
        EXPECT_GE(hm.at(i, j), 0.9);
      } else {
        EXPECT_LE(hm.at(i, j), 0.1);
      }
      EXPECT_EQ(hm.at(i, j), hm.at(j, i));
    }
  }
  // Features follow the direct definition.
  const auto feats = sequence_features(target, tokens);
  EXPECT_NEAR(hm.at(3, 40), cosine_sim(feats[3], feats[40]), 1e-15);
}

TEST(Heatmap, EmptyRangeAndBounds) {
  GridWorldModel target(default_gridworld_spec());
  const std::vector<TokenId> tokens(64, 0);
  const auto empty = similarity_heatmap(target, tokens, 2, 2);
  EXPECT_EQ(heatmap_csv(empty), "cell\n");
  auto kind = [&](int lo, int hi, std::size_t n) -> std::optional<ErrorKind> {
    try {
      similarity_heatmap(target, std::span(tokens).first(n), lo, hi);
    } catch (const Error& e) {
      return e.kind();
    }
    return std::nullopt;
  };
  EXPECT_EQ(kind(0, 9, 64), ErrorKind::kRowOutOfRange);
  EXPECT_EQ(kind(-1, 2, 64), ErrorKind::kRowOutOfRange);
  EXPECT_EQ(kind(3, 2, 64), ErrorKind::kRowOutOfRange);
  EXPECT_EQ(kind(0, 2, 10), ErrorKind::kRowOutOfRange);
}

TEST(Heatmap, CsvLayout) {
  Heatmap hm;
  hm.cells = {{0, 0}, {0, 1}};
  hm.values = {1.0, 0.5, 0.5, 1.0};
  EXPECT_EQ(heatmap_csv(hm), "cell,r0c0,r0c1\nr0c0,1,0.5\nr0c1,0.5,1\n");
}

}  // namespace
}  // namespace specrelax
