// Copyright 2026 The Refinery Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "refinery/engine.hpp"
#include "refinery/remote.hpp"
#include "refinery/simworld.hpp"

namespace refinery {

inline constexpr const char* kConfigEnvVar = "REFINERY_CONFIG";
inline constexpr const char* kDefaultConfigName = "refinery.json";

enum class RunMode { Sim, Remote };

// {mode, endpoints: {checker, editor, verifier, planner}, refine: {max_rounds,
// k, epsilon}, sim: {p_fail, seed}}
struct AppConfig {
  RunMode mode = RunMode::Sim;
  std::map<std::string, AgentEndpointConfig> endpoints;
  RefineConfig refine;
  double p_fail = 0.0;
  std::uint64_t seed = 0;
};

AppConfig parse_config(const Json& j);
// Throws Error(ConfigNotFound) if the file does not exist.
AppConfig load_config(const std::string& path);

// Explicit path, else $REFINERY_CONFIG, else ./refinery.json. Throws
// Error(ConfigNotFound) when the chosen file is missing.
std::string discover_config_path(const std::optional<std::string>& explicit_path = {});

struct Backends {
  Agents agents;
  std::shared_ptr<SceneStore> store;  // sim mode only
};

// Sim mode wires the rule planner, oracle checker, seeded editor and exact
// score verifier around one scene store. Remote mode talks HTTP to the
// configured endpoints; the planner endpoint is optional and the rule
// planner stands in when it is absent. Edited remote images go to
// `work_dir`.
Backends build_backends(const AppConfig& config, const std::string& work_dir = ".");

// "dir/name.ext" -> "dir/name.refined.ext"
std::string refined_path(const std::string& input_path);

/// Loads the discovered config, refines `image_path` (a scene file in sim
/// mode, an image file in remote mode) and writes the result beside it with
/// a ".refined" suffix. Returns the written path. A failed run throws its
/// error and writes nothing.
std::string refine_oneline(const std::string& prompt, const std::string& image_path);

}  // namespace refinery
