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

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "refinery/backends.hpp"
#include "refinery/core.hpp"

namespace refinery {

struct SceneObject {
  int oid = 0;
  std::string category;
  std::string color = "uncolored";
  Position position;
  std::optional<std::string> text;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

/// Symbolic stand-in for an image: single-cell objects on a 32x32 grid
/// (x rightward, y upward) plus a global style token.
struct Scene {
  std::vector<SceneObject> objects;  // kept sorted by oid
  std::string style = "none";
  int next_oid = 1;

  friend bool operator==(const Scene&, const Scene&) = default;
};

// oid uniqueness, grid bounds, next_oid above every oid.
void validate_scene(const Scene& scene);

// Canonical file form: {"objects": [...sorted by oid], "style": ...}.
// next_oid is not stored; loading sets it to max(oid) + 1.
void to_json(Json& j, const SceneObject& o);
void from_json(const Json& j, SceneObject& o);
void to_json(Json& j, const Scene& s);
void from_json(const Json& j, Scene& s);

std::string scene_digest(const Scene& scene);

// Throws Error(UnsupportedKind) for FreeForm.
bool eval_constraint(const Scene& scene, const Constraint& c);

// Fraction of non-FreeForm items that hold. Throws
// Error(NoEvaluableConstraints) when there are none.
double alignment_score(const Scene& scene, const Checklist& checklist);

// Per-primitive failure probabilities for the simulated editor.
struct FailureModel {
  double p_fail = 0.0;
  std::map<OpKind, double> overrides;

  double probability(OpKind kind) const {
    auto it = overrides.find(kind);
    return it == overrides.end() ? p_fail : it->second;
  }
};

/// Applies structured primitives in order. Each primitive independently
/// fails with its probability: a failed SetColor paints a uniformly random
/// wrong color, any other failed primitive is a no-op. Selectors resolve to
/// the lowest-oid match; unplaced Adds go to the first free cell in
/// row-major order.
///
/// Throws Error(SelectorNotFound) for a selector with no match.
Scene apply_edit(const Scene& scene, std::span<const EditOp> ops,
                 std::uint64_t rng_seed, const FailureModel& failures);
Scene apply_edit(const Scene& scene, std::span<const EditOp> ops,
                 std::uint64_t rng_seed, double p_fail);

// Minimal deterministic fix for an unsatisfied constraint. Throws
// Error(AlreadySatisfied) when `c` already holds.
EditInstruction sim_refine_instruction(const Constraint& c, const Scene& scene);

// Scene violating exactly `n_violations` checklist items, produced by
// inverting randomly chosen items. Throws Error(CorruptionInfeasible)
// after 100 unsuccessful draws.
Scene corrupt(const Scene& scene, const Checklist& checklist, int n_violations,
              std::uint64_t rng_seed);

// A scene satisfying every evaluable item, objects placed in the grid
// interior. Throws Error(CorruptionInfeasible) when the items conflict.
Scene build_satisfying_scene(const Checklist& checklist, std::uint64_t rng_seed);

/// Content-addressed scene storage backing Scene-mode ImageRefs.
class SceneStore {
 public:
  ImageRef put(Scene scene);
  Scene get(const ImageRef& ref) const;

  ImageRef load_file(const std::string& path);
  void save_file(const ImageRef& ref, const std::string& path) const;

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::string, Scene> scenes_;
};

Scene load_scene_file(const std::string& path);
void save_scene_file(const Scene& scene, const std::string& path);

class SimChecker final : public Checker {
 public:
  explicit SimChecker(std::shared_ptr<SceneStore> store) : store_(std::move(store)) {}
  CheckResult check(const ImageRef& image, const Constraint& c) override;
  EditInstruction refine(const ImageRef& image, const Constraint& c,
                         const CheckResult& result) override;

 private:
  std::shared_ptr<SceneStore> store_;
};

// Each call draws from its own stream derived from (seed, call index).
class SimEditor final : public Editor {
 public:
  SimEditor(std::shared_ptr<SceneStore> store, FailureModel failures, std::uint64_t seed)
      : store_(std::move(store)), failures_(std::move(failures)), seed_(seed) {}
  ImageRef edit(const ImageRef& image, const EditInstruction& instruction) override;

 private:
  std::shared_ptr<SceneStore> store_;
  FailureModel failures_;
  std::uint64_t seed_;
  std::atomic<std::uint64_t> calls_{0};
};

// Alignment of a stored scene against the rule-planned checklist.
class AlignmentScorer final : public Scorer {
 public:
  explicit AlignmentScorer(std::shared_ptr<SceneStore> store) : store_(std::move(store)) {}
  double score(const std::string& prompt, const ImageRef& image) override;

 private:
  std::shared_ptr<SceneStore> store_;
};

}  // namespace refinery
