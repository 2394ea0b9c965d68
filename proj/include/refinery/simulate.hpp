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
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "refinery/engine.hpp"
#include "refinery/simworld.hpp"

namespace refinery {

// Builds the verifier for one run from that run's alignment scorer. The
// default is ScoreVerifier(scorer, epsilon).
using VerifierFactory = std::function<std::shared_ptr<Verifier>(std::shared_ptr<Scorer>)>;

struct SimParams {
  int corpus_size = 200;
  int violations_min = 1;
  int violations_max = 3;
  FailureModel failures;
  RefineConfig refine;
  std::uint64_t seed = 0;
  VerifierFactory verifier;
  bool keep_traces = false;
  int threads = 1;
};

void validate_sim_params(const SimParams& params);

// A prompt over the closed grammar, with every category distinct.
std::string generate_prompt(std::uint64_t seed);

struct SimRun {
  int index = 0;
  std::string prompt;
  Checklist checklist;
  std::vector<int> initially_failing;  // constraint ids
  double initial_score = 0.0;
  double final_score = 0.0;
  RefineState state;
  std::optional<Error> error;
  std::optional<std::string> trace_error;  // validate_trace message, if any
  std::vector<TraceEvent> trace;           // kept only when requested
};

struct KindTally {
  int violated = 0;
  int fixed = 0;
};

struct SimStats {
  int runs = 0;
  int aborted_runs = 0;
  double mean_initial_alignment = 0.0;
  double mean_final_alignment = 0.0;
  double perfect_final_rate = 0.0;
  double mean_editor_calls = 0.0;
  double mean_rounds = 0.0;
  KindTally overall;
  std::map<ConstraintKind, KindTally> by_kind;
  int skipped_items = 0;
  int termination_bound_violations = 0;
  int monotonicity_violations = 0;
  int trace_violations = 0;
};

struct SimReport {
  SimParams params;
  std::vector<SimRun> runs;  // in index order
  SimStats stats;
};

SimRun simulate_one(const SimParams& params, int index);

/// Generates the corpus, corrupts each satisfying scene, refines it and
/// aggregates. Output depends only on the parameters, never on thread count.
SimReport simulate(const SimParams& params);

SimStats aggregate(const SimParams& params, const std::vector<SimRun>& runs);

// Stable schema; holds no timing data so equal seeds give identical bytes.
Json stats_json(const SimParams& params, const SimStats& stats);

}  // namespace refinery
