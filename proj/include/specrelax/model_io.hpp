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

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <variant>

#include "specrelax/model.hpp"

namespace specrelax {

inline constexpr int kModelFormatVersion = 1;

using ModelSpec = std::variant<TabularModelSpec, GridWorldSpec, LinearDrafterSpec>;

// JSON text with a `format_version` and a `kind` discriminator
// ("tabular", "gridworld", "linear_drafter"); matrices are nested row-major
// arrays. Parsing rejects unknown versions and kinds with kFormat.
std::string dump_model_spec(const ModelSpec& spec);
ModelSpec parse_model_spec(std::string_view text);

ModelSpec load_model_spec(const std::filesystem::path& path);
void save_model_spec(const std::filesystem::path& path, const ModelSpec& spec);

// Throws kInvalidArgument for drafter specs.
std::shared_ptr<const TargetModel> make_target(const ModelSpec& spec);
// Linear drafter specs become LinearDrafter; target specs become a
// TargetDrafter mirroring that model.
std::shared_ptr<const Drafter> make_drafter(const ModelSpec& spec);

}  // namespace specrelax
