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

#include "refinery/config.hpp"

#include <cstdlib>
#include <filesystem>

#include "refinery/digest.hpp"
#include "refinery/planner.hpp"

namespace fs = std::filesystem;

namespace refinery {

AppConfig parse_config(const Json& j) {
  if (!j.is_object()) throw Error(Errc::ParseError, "config must be a JSON object");
  AppConfig config;
  const std::string mode = j.value("mode", std::string("sim"));
  if (mode == "sim") {
    config.mode = RunMode::Sim;
  } else if (mode == "remote") {
    config.mode = RunMode::Remote;
  } else {
    throw Error(Errc::ParseError, "mode must be \"sim\" or \"remote\"");
  }

  if (auto it = j.find("endpoints"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw Error(Errc::ParseError, "endpoints must be an object");
    for (const auto& [role, endpoint] : it->items()) {
      if (role != "checker" && role != "editor" && role != "verifier" && role != "planner") {
        throw Error(Errc::ParseError, "unknown endpoint role '" + role + "'");
      }
      config.endpoints[role] = endpoint.get<AgentEndpointConfig>();
    }
  }

  if (auto it = j.find("refine"); it != j.end() && !it->is_null()) {
    const Json& r = *it;
    if (!r.is_object()) throw Error(Errc::ParseError, "refine must be an object");
    auto integer = [&](const char* key, int fallback) {
      if (!r.contains(key)) return fallback;
      if (!r[key].is_number_integer()) {
        throw Error(Errc::ParseError, std::string("refine.") + key + " must be an integer");
      }
      return r[key].get<int>();
    };
    config.refine.max_rounds = integer("max_rounds", config.refine.max_rounds);
    config.refine.retry_budget_k = integer("k", config.refine.retry_budget_k);
    if (r.contains("epsilon")) {
      if (!r["epsilon"].is_number()) throw Error(Errc::ParseError, "refine.epsilon must be a number");
      config.refine.verifier_epsilon = r["epsilon"].get<double>();
    }
  }
  validate_config(config.refine);

  if (auto it = j.find("sim"); it != j.end() && !it->is_null()) {
    const Json& s = *it;
    if (!s.is_object()) throw Error(Errc::ParseError, "sim must be an object");
    if (s.contains("p_fail")) {
      if (!s["p_fail"].is_number()) throw Error(Errc::ParseError, "sim.p_fail must be a number");
      config.p_fail = s["p_fail"].get<double>();
    }
    if (s.contains("seed")) {
      if (!s["seed"].is_number_unsigned() && !s["seed"].is_number_integer()) {
        throw Error(Errc::ParseError, "sim.seed must be an integer");
      }
      config.seed = s["seed"].get<std::uint64_t>();
    }
  }
  if (!(config.p_fail >= 0.0 && config.p_fail <= 1.0)) {
    throw Error(Errc::InvalidArgument, "sim.p_fail must lie in [0, 1]");
  }
  return config;
}

AppConfig load_config(const std::string& path) {
  if (!fs::is_regular_file(path)) {
    throw Error(Errc::ConfigNotFound, "no config file at '" + path + "'");
  }
  const Json j = Json::parse(read_file_bytes(path), nullptr, false);
  if (j.is_discarded()) throw Error(Errc::ParseError, "'" + path + "' is not valid JSON");
  return parse_config(j);
}

std::string discover_config_path(const std::optional<std::string>& explicit_path) {
  std::string path;
  if (explicit_path && !explicit_path->empty()) {
    path = *explicit_path;
  } else if (const char* env = std::getenv(kConfigEnvVar); env && *env) {
    path = env;
  } else {
    path = kDefaultConfigName;
  }
  if (!fs::is_regular_file(path)) {
    throw Error(Errc::ConfigNotFound, "no config file at '" + path + "'");
  }
  return path;
}

Backends build_backends(const AppConfig& config, const std::string& work_dir) {
  Backends out;
  if (config.mode == RunMode::Sim) {
    out.store = std::make_shared<SceneStore>();
    auto scorer = std::make_shared<AlignmentScorer>(out.store);
    out.agents.planner = std::make_shared<RulePlanner>();
    out.agents.checker = std::make_shared<SimChecker>(out.store);
    out.agents.editor =
        std::make_shared<SimEditor>(out.store, FailureModel{config.p_fail, {}}, config.seed);
    out.agents.verifier =
        std::make_shared<ScoreVerifier>(scorer, config.refine.verifier_epsilon);
    out.agents.scorer = scorer;
    return out;
  }

  auto transport = [&](const char* role) {
    auto it = config.endpoints.find(role);
    if (it == config.endpoints.end()) {
      throw Error(Errc::InvalidArgument, std::string("remote mode needs a '") + role +
                                             "' endpoint");
    }
    return std::make_pair(std::make_shared<HttpChatTransport>(it->second),
                          it->second.model_name);
  };
  auto [checker, checker_model] = transport("checker");
  auto [editor, editor_model] = transport("editor");
  auto [verifier, verifier_model] = transport("verifier");
  out.agents.checker = std::make_shared<RemoteChecker>(checker, checker_model);
  out.agents.editor = std::make_shared<RemoteEditor>(editor, editor_model, work_dir);
  out.agents.verifier = std::make_shared<RemoteVerifier>(verifier, verifier_model);
  if (config.endpoints.contains("planner")) {
    auto [planner, planner_model] = transport("planner");
    out.agents.planner = std::make_shared<RemotePlanner>(planner, planner_model);
  } else {
    out.agents.planner = std::make_shared<RulePlanner>();
  }
  return out;
}

std::string refined_path(const std::string& input_path) {
  fs::path p(input_path);
  fs::path out = p.parent_path() / (p.stem().string() + ".refined" + p.extension().string());
  return out.string();
}

std::string refine_oneline(const std::string& prompt, const std::string& image_path) {
  const AppConfig config = load_config(discover_config_path());
  const std::string work_dir = fs::path(image_path).parent_path().string();
  Backends backends = build_backends(config, work_dir.empty() ? "." : work_dir);

  const ImageRef initial = config.mode == RunMode::Sim ? backends.store->load_file(image_path)
                                                       : file_image(image_path);
  RefineOutcome outcome = refine(prompt, initial, backends.agents, config.refine);
  if (outcome.error) throw *outcome.error;

  const std::string out_path = refined_path(image_path);
  if (config.mode == RunMode::Sim) {
    backends.store->save_file(outcome.final_image, out_path);
  } else {
    write_file_bytes(out_path, read_file_bytes(outcome.final_image.locator));
  }
  return out_path;
}

}  // namespace refinery
