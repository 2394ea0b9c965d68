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

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "refinery/backends.hpp"
#include "refinery/core.hpp"
#include "refinery/planner.hpp"
#include "refinery/trace.hpp"

namespace refinery {

enum class ItemStatus { Pending, Passed, Skipped };

std::string_view status_name(ItemStatus status);

struct Agents {
  std::shared_ptr<Planner> planner;
  std::shared_ptr<Checker> checker;
  std::shared_ptr<Editor> editor;
  std::shared_ptr<Verifier> verifier;
  // Optional; when set, the score of every accepted image is recorded.
  std::shared_ptr<Scorer> scorer;
};

struct RefineState {
  std::string prompt;
  Checklist checklist;
  std::map<int, ItemStatus> statuses;
  ImageRef best;
  int round = 0;
  int editor_calls = 0;
  std::vector<double> accepted_scores;

  int count(ItemStatus status) const;
};

struct RefineOutcome {
  ImageRef final_image;
  RefineState state;
  std::vector<TraceEvent> trace;
  // Set when the run aborted; final_image is then the best image so far.
  std::optional<Error> error;

  bool ok() const { return !error.has_value(); }
};

/// Multi-round refinement.
///
/// Plans a checklist, then sweeps it up to max_rounds times. Each pending
/// item is checked against the current best image; a passing item becomes
/// Passed for good. A failing item gets up to K edit attempts, each
/// compared against the current best: the first Better verdict replaces
/// the best image (the item stays Pending and is re-checked next sweep),
/// while K rejections mark the item Skipped for good. The run stops early
/// once nothing is Pending.
///
/// Backend errors do not throw: the run stops and the outcome carries the
/// error together with the best image reached so far. Invalid config or
/// missing agents throw Error(InvalidArgument).
RefineOutcome refine(const std::string& prompt, const ImageRef& initial,
                     const Agents& agents, const RefineConfig& config,
                     std::string run_id = {});

// The K-bounded edit/verify loop for one failing item. Throws on backend
// errors other than EditRejected, which counts as a rejected attempt.
void attempt_fix(RefineState& state, const Constraint& c,
                 const EditInstruction& instruction, const Agents& agents,
                 const RefineConfig& config, TraceLog& trace);

// Deterministic id from the prompt and the initial image digest.
std::string derive_run_id(const std::string& prompt, const ImageRef& initial);

}  // namespace refinery
