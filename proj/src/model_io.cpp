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

#include "specrelax/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace specrelax {

using nlohmann::json;

namespace {

json to_json(const TabularModelSpec& s) {
  json table = json::array();
  for (const auto& row : s.table) table.push_back({{"window", row.window}, {"dist", row.dist}});
  json features = json::array();
  for (const auto& row : s.feature_table) {
    features.push_back({{"window", row.window}, {"feature", row.feature}});
  }
  return {{"format_version", kModelFormatVersion},
          {"kind", "tabular"},
          {"V", s.vocab},
          {"order", s.order},
          {"h", s.feature_dim},
          {"N", s.grid_side},
          {"table", std::move(table)},
          {"featureTable", std::move(features)}};
}

json to_json(const GridWorldSpec& s) {
  return {{"format_version", kModelFormatVersion},
          {"kind", "gridworld"},
          {"N", s.grid_side},
          {"V", s.vocab},
          {"h", s.feature_dim},
          {"clusters", s.clusters},
          {"regions", s.regions},
          {"preferredCluster", s.preferred_cluster},
          {"regionAnchors", s.region_anchors},
          {"clusterAnchors", s.cluster_anchors},
          {"inClusterMass", s.in_cluster_mass},
          {"featureMix", s.feature_mix},
          {"featureJitter", s.feature_jitter}};
}

json to_json(const LinearDrafterSpec& s) {
  const std::size_t d = s.context_dim();
  json w = json::array();
  for (std::size_t t = 0; t < s.vocab; ++t) {
    w.push_back(std::vector<double>(s.weights.begin() + static_cast<std::ptrdiff_t>(t * d),
                                    s.weights.begin() + static_cast<std::ptrdiff_t>((t + 1) * d)));
  }
  return {{"format_version", kModelFormatVersion},
          {"kind", "linear_drafter"},
          {"V", s.vocab},
          {"N", s.grid_side},
          {"d", d},
          {"W", std::move(w)},
          {"b", s.bias}};
}

template <class T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) fail(ErrorKind::kFormat, std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, std::string("bad field '") + name + "': " + e.what());
  }
}

template <class T>
T field_or(const json& j, const char* name, T fallback) {
  return j.contains(name) ? field<T>(j, name) : fallback;
}

TabularModelSpec tabular_from_json(const json& j) {
  TabularModelSpec s;
  s.vocab = field<std::size_t>(j, "V");
  s.order = field<std::size_t>(j, "order");
  s.feature_dim = field<std::size_t>(j, "h");
  s.grid_side = field_or<int>(j, "N", 8);
  for (const auto& row : field<json>(j, "table")) {
    s.table.push_back({field<std::vector<std::int64_t>>(row, "window"),
                       field<std::vector<double>>(row, "dist")});
  }
  for (const auto& row : field<json>(j, "featureTable")) {
    s.feature_table.push_back({field<std::vector<std::int64_t>>(row, "window"),
                               field<std::vector<double>>(row, "feature")});
  }
  return s;
}

GridWorldSpec gridworld_from_json(const json& j) {
  GridWorldSpec s;
  s.grid_side = field<int>(j, "N");
  s.vocab = field<std::size_t>(j, "V");
  s.feature_dim = field<std::size_t>(j, "h");
  s.clusters = field<std::vector<std::size_t>>(j, "clusters");
  s.regions = field<std::vector<std::size_t>>(j, "regions");
  s.preferred_cluster = field<std::vector<std::size_t>>(j, "preferredCluster");
  s.region_anchors = field<std::vector<std::vector<double>>>(j, "regionAnchors");
  s.cluster_anchors = field<std::vector<std::vector<double>>>(j, "clusterAnchors");
  s.in_cluster_mass = field_or<double>(j, "inClusterMass", 0.8);
  s.feature_mix = field_or<double>(j, "featureMix", 0.2);
  s.feature_jitter = field_or<double>(j, "featureJitter", 0.0);
  return s;
}

LinearDrafterSpec drafter_from_json(const json& j) {
  LinearDrafterSpec s;
  s.vocab = field<std::size_t>(j, "V");
  s.grid_side = field<int>(j, "N");
  const auto d = field<std::size_t>(j, "d");
  if (d != s.context_dim()) fail(ErrorKind::kFormat, "d must equal V + 2N");
  const auto w = field<std::vector<std::vector<double>>>(j, "W");
  if (w.size() != s.vocab) fail(ErrorKind::kFormat, "W must have V rows");
  for (const auto& row : w) {
    if (row.size() != d) fail(ErrorKind::kFormat, "W rows must have d entries");
    s.weights.insert(s.weights.end(), row.begin(), row.end());
  }
  s.bias = field<std::vector<double>>(j, "b");
  return s;
}

}  // namespace

std::string dump_model_spec(const ModelSpec& spec) {
  return std::visit([](const auto& s) { return to_json(s).dump(); }, spec);
}

ModelSpec parse_model_spec(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kFormat, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::kFormat, "model spec must be a JSON object");
  const int version = field<int>(j, "format_version");
  if (version != kModelFormatVersion) {
    fail(ErrorKind::kFormat, "unsupported format_version " + std::to_string(version));
  }
  const auto kind = field<std::string>(j, "kind");
  if (kind == "tabular") return tabular_from_json(j);
  if (kind == "gridworld") return gridworld_from_json(j);
  if (kind == "linear_drafter") return drafter_from_json(j);
  fail(ErrorKind::kFormat, "unknown model kind '" + kind + "'");
}

ModelSpec load_model_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open model file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model_spec(buf.str());
}

void save_model_spec(const std::filesystem::path& path, const ModelSpec& spec) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write model file " + path.string());
  out << dump_model_spec(spec) << '\n';
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

std::shared_ptr<const TargetModel> make_target(const ModelSpec& spec) {
  if (const auto* t = std::get_if<TabularModelSpec>(&spec)) {
    return std::make_shared<TabularModel>(*t);
  }
  if (const auto* g = std::get_if<GridWorldSpec>(&spec)) {
    return std::make_shared<GridWorldModel>(*g);
  }
  fail(ErrorKind::kInvalidArgument, "a linear drafter cannot serve as the target model");
}

std::shared_ptr<const Drafter> make_drafter(const ModelSpec& spec) {
  if (const auto* d = std::get_if<LinearDrafterSpec>(&spec)) {
    return std::make_shared<LinearDrafter>(*d);
  }
  return std::make_shared<TargetDrafter>(make_target(spec));
}

}  // namespace specrelax
