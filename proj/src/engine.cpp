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

#include "refinery/engine.hpp"

#include <algorithm>

#include "refinery/digest.hpp"

namespace refinery {

std::string_view status_name(ItemStatus status) {
  switch (status) {
    case ItemStatus::Pending: return "pending";
    case ItemStatus::Passed: return "passed";
    case ItemStatus::Skipped: return "skipped";
  }
  return "pending";
}

int RefineState::count(ItemStatus status) const {
  return static_cast<int>(std::count_if(statuses.begin(), statuses.end(),
                                        [&](const auto& kv) { return kv.second == status; }));
}

std::string derive_run_id(const std::string& prompt, const ImageRef& initial) {
  return sha256_hex(prompt + "\n" + initial.digest).substr(0, 12);
}

namespace {

void require_agents(const Agents& agents) {
  if (!agents.planner || !agents.checker || !agents.editor || !agents.verifier) {
    throw Error(Errc::InvalidArgument, "planner, checker, editor and verifier are all required");
  }
}

Json finish_payload(const RefineState& state) {
  return Json{{"rounds_used", state.round},
              {"editor_calls", state.editor_calls},
              {"passed", state.count(ItemStatus::Passed)},
              {"skipped", state.count(ItemStatus::Skipped)},
              {"pending", state.count(ItemStatus::Pending)},
              {"final", state.best}};
}

}  // namespace

void attempt_fix(RefineState& state, const Constraint& c,
                 const EditInstruction& instruction, const Agents& agents,
                 const RefineConfig& config, TraceLog& trace) {
  auto status = state.statuses.find(c.id);
  if (status == state.statuses.end() || status->second != ItemStatus::Pending) {
    throw Error(Errc::InvalidArgument,
                "attempt_fix on constraint #" + std::to_string(c.id) + " which is not pending");
  }
  if (instruction.surface.empty()) {
    throw Error(Errc::InvalidArgument, "edit instruction surface is empty");
  }

  for (int attempt = 1; attempt <= config.retry_budget_k; ++attempt) {
    const ImageRef before = state.best;
    ++state.editor_calls;
    trace.emit(state.round, c.id, EventType::EditAttempt,
               Json{{"attempt", attempt}, {"instruction", instruction}}, before.digest);

    ImageRef candidate;
    try {
      candidate = agents.editor->edit(before, instruction);
    } catch (const Error& e) {
      if (e.code() != Errc::EditRejected) throw;
      trace.emit(state.round, c.id, EventType::Reject,
                 Json{{"attempt", attempt}, {"cause", "edit_rejected"}, {"message", e.what()}},
                 before.digest);
      continue;
    }

    const bool identical = candidate.digest == before.digest;
    const Verdict verdict = verify(state.prompt, before, candidate, *agents.verifier);
    trace.emit(state.round, c.id, EventType::Verdict,
               Json{{"attempt", attempt},
                    {"verdict", verdict},
                    {"candidate", candidate.digest},
                    {"short_circuit", identical}},
               before.digest);

    if (verdict == Verdict::Better) {
      state.best = candidate;
      Json payload{{"attempt", attempt}, {"digest", candidate.digest}};
      if (agents.scorer) {
        const double s = agents.scorer->score(state.prompt, candidate);
        state.accepted_scores.push_back(s);
        payload["score"] = s;
      }
      trace.emit(state.round, c.id, EventType::Accept, std::move(payload), candidate.digest);
      return;
    }
    trace.emit(state.round, c.id, EventType::Reject,
               Json{{"attempt", attempt}, {"cause", "verdict"}, {"verdict", verdict}},
               before.digest);
  }

  status->second = ItemStatus::Skipped;
  trace.emit(state.round, c.id, EventType::Skip,
             Json{{"attempts", config.retry_budget_k}}, state.best.digest);
}

RefineOutcome refine(const std::string& prompt, const ImageRef& initial,
                     const Agents& agents, const RefineConfig& config,
                     std::string run_id) {
  validate_config(config);
  require_agents(agents);
  if (run_id.empty()) run_id = derive_run_id(prompt, initial);

  RefineOutcome outcome;
  RefineState& state = outcome.state;
  state.prompt = prompt;
  state.best = initial;
  TraceLog trace(run_id);

  auto abort_with = [&](const Error& e) {
    outcome.error = e;
    Json payload = finish_payload(state);
    payload["aborted"] = true;
    payload["error"] = e.what();
    trace.emit(state.round, std::nullopt, EventType::Finish, std::move(payload),
               state.best.digest);
  };

  try {
    state.checklist = agents.planner->plan(prompt);
    validate_checklist(state.checklist);
    if (state.checklist.items.empty()) {
      throw Error(Errc::PlannerFailed, "planner produced an empty checklist");
    }
  } catch (const Error& e) {
    abort_with(e.code() == Errc::PlannerFailed ? e : Error(Errc::PlannerFailed, e.what()));
    outcome.final_image = state.best;
    outcome.trace = std::move(trace).take();
    return outcome;
  }

  for (const auto& c : state.checklist.items) state.statuses[c.id] = ItemStatus::Pending;
  trace.emit(0, std::nullopt, EventType::Plan,
             Json{{"checklist", state.checklist}, {"initial", initial}}, initial.digest);

  try {
    if (agents.scorer) state.accepted_scores.push_back(agents.scorer->score(prompt, initial));

    for (int round = 1; round <= config.max_rounds; ++round) {
      state.round = round;
      for (const auto& c : state.checklist.items) {
        if (state.statuses[c.id] != ItemStatus::Pending) continue;
        const CheckResult result = agents.checker->check(state.best, c);
        if (result.passed) {
          state.statuses[c.id] = ItemStatus::Passed;
          trace.emit(round, c.id, EventType::CheckPass, Json{{"question", c.question}},
                     state.best.digest);
          continue;
        }
        trace.emit(round, c.id, EventType::CheckFail,
                   Json{{"question", c.question}, {"reason", result.reason}},
                   state.best.digest);
        const EditInstruction instruction = agents.checker->refine(state.best, c, result);
        attempt_fix(state, c, instruction, agents, config, trace);
      }
      if (state.count(ItemStatus::Pending) == 0) break;
    }
    trace.emit(state.round, std::nullopt, EventType::Finish, finish_payload(state),
               state.best.digest);
  } catch (const Error& e) {
    abort_with(e);
  }

  outcome.final_image = state.best;
  outcome.trace = std::move(trace).take();
  return outcome;
}

}  // namespace refinery
