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

#include "specrelax/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>
#include <set>

#include <json.hpp>

#include "specrelax/model_io.hpp"
#include "specrelax/rng.hpp"

namespace specrelax {

namespace {

std::uint64_t parse_u64(std::string_view text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    fail(ErrorKind::kInvalidArgument, "bad integer '" + std::string(text) + "'");
  }
  return v;
}

// "a..b" inclusive.
std::pair<std::uint64_t, std::uint64_t> parse_range(std::string_view text) {
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) {
    const auto v = parse_u64(text);
    return {v, v};
  }
  const auto lo = parse_u64(text.substr(0, dots));
  const auto hi = parse_u64(text.substr(dots + 2));
  if (hi < lo) fail(ErrorKind::kInvalidArgument, "range end precedes its start");
  return {lo, hi};
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::kIo, "cannot open '" + path + "' for writing");
  f << content;
  if (!f) fail(ErrorKind::kIo, "failed writing '" + path + "'");
}

}  // namespace

std::vector<std::uint64_t> parse_seeds(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  if (text.find("..") != std::string_view::npos) {
    const auto [lo, hi] = parse_range(text);
    if (hi - lo >= 10'000'000) fail(ErrorKind::kInvalidArgument, "seed range too large");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  while (!text.empty()) {
    const auto comma = text.find(',');
    seeds.push_back(parse_u64(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (seeds.empty()) fail(ErrorKind::kInvalidArgument, "seed list is empty");
  return seeds;
}

void ExperimentConfig::validate() const {
  if (model_path.empty()) fail(ErrorKind::kInvalidArgument, "a target model file is required");
  if (!std::filesystem::exists(model_path)) {
    fail(ErrorKind::kIo, "model file '" + model_path + "' does not exist");
  }
  if (!drafter_path.empty() && !std::filesystem::exists(drafter_path)) {
    fail(ErrorKind::kIo, "drafter file '" + drafter_path + "' does not exist");
  }
  if (seeds.empty()) fail(ErrorKind::kInvalidArgument, "at least one seed is required");
  decode.mask.validate();
  decode.relax.validate();
}

ExperimentConfig parse_experiment_config(std::string_view json_text, ExperimentConfig cfg) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::kFormat, "config must be a JSON object");

  static const std::set<std::string> known = {
      "model",     "drafter",      "mode",        "tree",  "tau-pos",       "tau-seq",
      "tvd-budget", "seeds",       "out",         "trace", "heatmap",       "heatmap-rows",
      "len",       "kappa",        "candidates",  "sibling-mode",  "interchange",
      "convergence", "c",          "tau-seq-train", "epochs", "lr", "seed", "sequences"};
  try {
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) fail(ErrorKind::kFormat, "unknown config key '" + key + "'");
    }
    auto str = [&](const char* key, std::string& dst) {
      if (j.contains(key)) dst = j.at(key).get<std::string>();
    };
    auto num = [&](const char* key, double& dst) {
      if (j.contains(key)) dst = j.at(key).get<double>();
    };
    str("model", cfg.model_path);
    str("drafter", cfg.drafter_path);
    str("out", cfg.metrics_out);
    str("trace", cfg.trace_out);
    str("heatmap", cfg.heatmap_out);
    if (j.contains("mode")) cfg.decode.mode = parse_decode_mode(j.at("mode").get<std::string>());
    if (j.contains("tree")) cfg.decode.mask = TreeMask::parse(j.at("tree").get<std::string>());
    num("tau-pos", cfg.decode.relax.tau_pos);
    num("tau-seq", cfg.decode.relax.tau_seq);
    num("tvd-budget", cfg.decode.relax.delta);
    num("kappa", cfg.decode.kappa);
    if (j.contains("interchange")) cfg.decode.relax.enable_interchange = j.at("interchange").get<bool>();
    if (j.contains("convergence")) cfg.decode.relax.enable_convergence = j.at("convergence").get<bool>();
    if (j.contains("candidates")) {
      cfg.decode.candidates = parse_candidate_mode(j.at("candidates").get<std::string>());
    }
    if (j.contains("sibling-mode")) {
      cfg.decode.relax.sibling_mode = parse_sibling_mode(j.at("sibling-mode").get<std::string>());
    }
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      if (s.is_array()) {
        cfg.seeds = s.get<std::vector<std::uint64_t>>();
      } else if (s.is_number_unsigned()) {
        cfg.seeds = {s.get<std::uint64_t>()};
      } else {
        cfg.seeds = parse_seeds(s.get<std::string>());
      }
    }
    if (j.contains("heatmap-rows")) {
      const auto [lo, hi] = parse_range(j.at("heatmap-rows").get<std::string>());
      cfg.heatmap_row_begin = static_cast<int>(lo);
      cfg.heatmap_row_end = static_cast<int>(hi) + 1;
    }
    if (j.contains("len")) cfg.length = j.at("len").get<std::size_t>();
    num("c", cfg.train.c);
    num("tau-seq-train", cfg.train.tau_seq_train);
    num("lr", cfg.train.learning_rate);
    if (j.contains("epochs")) cfg.train.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("seed")) cfg.train.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("sequences")) cfg.train.sequences = j.at("sequences").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("config value has the wrong type: ") + e.what());
  }
  return cfg;
}

ExperimentResult run_experiment(const TargetModel& target, const Drafter* drafter,
                                const DecodeOptions& options,
                                std::span<const std::uint64_t> seeds, std::size_t length,
                                std::size_t threads) {
  if (seeds.empty()) fail(ErrorKind::kInvalidArgument, "at least one seed is required");
  if (length == 0) {
    const auto side = static_cast<std::size_t>(target.grid_side());
    length = side * side;
  }
  ExperimentResult result;
  result.runs.resize(seeds.size());

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, seeds.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        RngStream rng(seeds[i]);
        result.runs[i] = SeedRun{seeds[i], decode_sequence(target, drafter, options, length, rng)};
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = seeds.size();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<Metrics> per_seed;
  per_seed.reserve(result.runs.size());
  for (const auto& r : result.runs) per_seed.push_back(r.result.metrics);
  result.aggregate = aggregate_metrics(per_seed);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto target = make_target(load_model_spec(cfg.model_path));
  std::shared_ptr<const Drafter> drafter;
  if (cfg.decode.mode != DecodeMode::kAr) {
    drafter = cfg.drafter_path.empty() ? std::make_shared<TargetDrafter>(target)
                                       : make_drafter(load_model_spec(cfg.drafter_path));
  }
  DecodeOptions options = cfg.decode;
  options.keep_trace = !cfg.trace_out.empty();
  auto result = run_experiment(*target, drafter.get(), options, cfg.seeds, cfg.length);

  if (!cfg.metrics_out.empty()) write_file(cfg.metrics_out, metrics_jsonl(result));
  if (!cfg.trace_out.empty()) {
    std::string text;
    for (const auto& r : result.runs) text += trace_to_jsonl(r.result.trace, r.seed);
    write_file(cfg.trace_out, text);
  }
  if (!cfg.heatmap_out.empty()) {
    const int end = cfg.heatmap_row_end < 0 ? target->grid_side() : cfg.heatmap_row_end;
    const auto hm =
        similarity_heatmap(*target, result.runs.front().result.tokens, cfg.heatmap_row_begin, end);
    write_file(cfg.heatmap_out, heatmap_csv(hm));
  }
  return result;
}

std::string metrics_jsonl(const ExperimentResult& result) {
  std::string out;
  auto line = [&](nlohmann::ordered_json head, const Metrics& m) {
    const auto body = nlohmann::ordered_json::parse(metrics_to_json(m));
    for (const auto& [k, v] : body.items()) head[k] = v;
    out += head.dump();
    out += '\n';
  };
  for (const auto& r : result.runs) {
    line({{"kind", "seed"}, {"seed", r.seed}}, r.result.metrics);
  }
  line({{"kind", "aggregate"}, {"seeds", result.runs.size()}}, result.aggregate);
  return out;
}

McResult mc_distribution_test(const TargetModel& target, const Drafter* drafter,
                              const DecodeOptions& options, std::size_t samples,
                              std::size_t length, std::uint64_t seed) {
  if (samples == 0) fail(ErrorKind::kInvalidArgument, "need at least one sample");
  const SequenceDistribution exact = enumerate_ar_distribution(target, length);
  std::vector<std::uint64_t> counts(exact.prob.size(), 0);
  const std::uint64_t base = mix64(seed);
  for (std::size_t i = 0; i < samples; ++i) {
    RngStream rng(base + i);
    const auto r = decode_sequence(target, drafter, options, length, rng);
    ++counts[exact.code(r.tokens)];
  }
  McResult out;
  out.samples = samples;
  double l1 = 0.0;
  const double m = static_cast<double>(samples);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    l1 += std::fabs(static_cast<double>(counts[c]) / m - exact.prob[c]);
  }
  out.tvd = 0.5 * l1;
  out.bound = 3.0 * std::sqrt(static_cast<double>(exact.prob.size()) / m);
  out.pass = out.tvd <= out.bound;
  return out;
}

std::vector<FeatureVec> sequence_features(const TargetModel& target,
                                          std::span<const TokenId> tokens) {
  std::vector<FeatureVec> out;
  out.reserve(tokens.size());
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    out.push_back(target.eval(tokens.first(k), position_of(k, target.grid_side())).feature);
  }
  return out;
}

Heatmap similarity_heatmap(const TargetModel& target, std::span<const TokenId> tokens,
                           int row_begin, int row_end) {
  const int side = target.grid_side();
  if (row_begin < 0 || row_end < row_begin || row_end > side) {
    fail(ErrorKind::kRowOutOfRange, "row range [" + std::to_string(row_begin) + ", " +
                                        std::to_string(row_end) + ") is outside the grid");
  }
  const auto first = static_cast<std::size_t>(row_begin) * static_cast<std::size_t>(side);
  const auto last = static_cast<std::size_t>(row_end) * static_cast<std::size_t>(side);
  if (last > tokens.size()) {
    fail(ErrorKind::kRowOutOfRange, "requested rows extend past the decoded tokens");
  }
  Heatmap hm;
  std::vector<FeatureVec> features;
  for (std::size_t k = first; k < last; ++k) {
    hm.cells.push_back(GridPos::from_index(k, side));
    features.push_back(target.eval(tokens.first(k), hm.cells.back()).feature);
  }
  const std::size_t n = features.size();
  hm.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double c = cosine_sim(features[i], features[j]);
      hm.values[i * n + j] = c;
      hm.values[j * n + i] = c;
    }
  }
  return hm;
}

std::string heatmap_csv(const Heatmap& heatmap) {
  auto name = [](const GridPos& p) {
    return "r" + std::to_string(p.row) + "c" + std::to_string(p.col);
  };
  std::string out = "cell";
  for (const auto& c : heatmap.cells) out += "," + name(c);
  out += '\n';
  char buf[32];
  for (std::size_t i = 0; i < heatmap.cells.size(); ++i) {
    out += name(heatmap.cells[i]);
    for (std::size_t j = 0; j < heatmap.cells.size(); ++j) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, heatmap.at(i, j));
      out += ',';
      out.append(buf, ptr);
    }
    out += '\n';
  }
  return out;
}

}  // namespace specrelax
