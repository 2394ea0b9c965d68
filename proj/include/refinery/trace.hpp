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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refinery/core.hpp"

namespace refinery {

enum class EventType {
  Plan,
  CheckPass,
  CheckFail,
  EditAttempt,
  Verdict,
  Accept,
  Reject,
  Skip,
  Finish,
};

std::string_view event_name(EventType type);
EventType parse_event_name(std::string_view name);

struct TraceEvent {
  std::string run_id;
  std::int64_t seq = 0;
  int round = 0;
  std::optional<int> constraint_id;
  EventType event = EventType::Plan;
  Json payload = Json::object();
  std::string best_digest;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

void to_json(Json& j, const TraceEvent& e);
void from_json(const Json& j, TraceEvent& e);

// Append-only event log for one run; seq starts at 0.
class TraceLog {
 public:
  explicit TraceLog(std::string run_id) : run_id_(std::move(run_id)) {}

  const TraceEvent& emit(int round, std::optional<int> constraint_id, EventType event,
                         Json payload, const std::string& best_digest);

  const std::string& run_id() const { return run_id_; }
  const std::vector<TraceEvent>& events() const { return events_; }
  std::vector<TraceEvent> take() && { return std::move(events_); }

 private:
  std::string run_id_;
  std::vector<TraceEvent> events_;
};

// One compact JSON object per line.
std::string to_jsonl(const std::vector<TraceEvent>& events);
void write_trace(const std::string& path, const std::vector<TraceEvent>& events);

// Throws Error(CorruptTrace) on empty input or malformed lines.
std::vector<TraceEvent> parse_trace(std::string_view jsonl);
std::vector<TraceEvent> read_trace(const std::string& path);

/// Structural checks over a complete run trace:
///   - a single run_id and strictly increasing seq
///   - starts with plan (or finish, for runs whose planner failed) and ends
///     with exactly one finish
///   - no check/edit activity on a constraint after its check_pass or skip
///   - every reject leaves best_digest as it was at the matching
///     edit_attempt; every accept carries the new digest
/// Throws Error(CorruptTrace) describing the first violation.
void validate_trace(const std::vector<TraceEvent>& events);

// One line per (round, constraint) describing what happened, in the order
// the loop visited them.
std::vector<std::string> narrate_trace(const std::vector<TraceEvent>& events);

}  // namespace refinery
