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

#include "refinery/trace.hpp"

#include <array>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "refinery/digest.hpp"

namespace refinery {
namespace {

constexpr std::array<std::pair<EventType, std::string_view>, 9> kEvents = {{
    {EventType::Plan, "plan"},
    {EventType::CheckPass, "check_pass"},
    {EventType::CheckFail, "check_fail"},
    {EventType::EditAttempt, "edit_attempt"},
    {EventType::Verdict, "verdict"},
    {EventType::Accept, "accept"},
    {EventType::Reject, "reject"},
    {EventType::Skip, "skip"},
    {EventType::Finish, "finish"},
}};

[[noreturn]] void corrupt_trace(const std::string& what) {
  throw Error(Errc::CorruptTrace, what);
}

bool is_item_event(EventType t) {
  return t != EventType::Plan && t != EventType::Finish;
}

}  // namespace

std::string_view event_name(EventType type) {
  for (const auto& [t, name] : kEvents) {
    if (t == type) return name;
  }
  return "plan";
}

EventType parse_event_name(std::string_view name) {
  for (const auto& [t, n] : kEvents) {
    if (n == name) return t;
  }
  throw Error(Errc::ParseError, "unknown trace event '" + std::string(name) + "'");
}

void to_json(Json& j, const TraceEvent& e) {
  j = Json{{"run_id", e.run_id},
           {"seq", e.seq},
           {"round", e.round},
           {"constraint_id", e.constraint_id ? Json(*e.constraint_id) : Json(nullptr)},
           {"event", event_name(e.event)},
           {"payload", e.payload},
           {"best_digest", e.best_digest}};
}

void from_json(const Json& j, TraceEvent& e) {
  auto field = [&](const char* key) -> const Json& {
    if (!j.is_object() || !j.contains(key)) {
      throw Error(Errc::ParseError, std::string("trace event lacks '") + key + "'");
    }
    return j.at(key);
  };
  const Json& run_id = field("run_id");
  const Json& seq = field("seq");
  const Json& round = field("round");
  const Json& cid = field("constraint_id");
  const Json& event = field("event");
  const Json& best = field("best_digest");
  if (!run_id.is_string() || !seq.is_number_integer() || !round.is_number_integer() ||
      !(cid.is_null() || cid.is_number_integer()) || !event.is_string() ||
      !best.is_string()) {
    throw Error(Errc::ParseError, "trace event has a mistyped field");
  }
  e.run_id = run_id.get<std::string>();
  e.seq = seq.get<std::int64_t>();
  e.round = round.get<int>();
  e.constraint_id = cid.is_null() ? std::nullopt : std::optional<int>(cid.get<int>());
  e.event = parse_event_name(event.get<std::string>());
  e.payload = j.contains("payload") ? j.at("payload") : Json::object();
  e.best_digest = best.get<std::string>();
}

const TraceEvent& TraceLog::emit(int round, std::optional<int> constraint_id,
                                 EventType event, Json payload,
                                 const std::string& best_digest) {
  TraceEvent e;
  e.run_id = run_id_;
  e.seq = static_cast<std::int64_t>(events_.size());
  e.round = round;
  e.constraint_id = constraint_id;
  e.event = event;
  e.payload = std::move(payload);
  e.best_digest = best_digest;
  events_.push_back(std::move(e));
  return events_.back();
}

std::string to_jsonl(const std::vector<TraceEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    out += Json(e).dump();
    out += '\n';
  }
  return out;
}

void write_trace(const std::string& path, const std::vector<TraceEvent>& events) {
  write_file_bytes(path, to_jsonl(events));
}

std::vector<TraceEvent> parse_trace(std::string_view jsonl) {
  std::vector<TraceEvent> events;
  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin < jsonl.size()) {
    auto end = jsonl.find('\n', begin);
    if (end == std::string_view::npos) end = jsonl.size();
    const auto line = jsonl.substr(begin, end - begin);
    begin = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) corrupt_trace("line " + std::to_string(line_no) + " is not JSON");
    try {
      events.push_back(j.get<TraceEvent>());
    } catch (const Error& e) {
      corrupt_trace("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (events.empty()) corrupt_trace("trace is empty");
  return events;
}

std::vector<TraceEvent> read_trace(const std::string& path) {
  return parse_trace(read_file_bytes(path));
}

void validate_trace(const std::vector<TraceEvent>& events) {
  if (events.empty()) corrupt_trace("trace is empty");
  const auto& first = events.front();
  if (first.event != EventType::Plan &&
      !(first.event == EventType::Finish && events.size() == 1)) {
    corrupt_trace("trace must start with a plan event");
  }
  if (events.back().event != EventType::Finish) corrupt_trace("trace must end with finish");

  std::set<int> known_ids;
  if (first.event == EventType::Plan) {
    const auto& items = first.payload.value("checklist", Json::object()).value("items", Json::array());
    for (const auto& item : items) {
      if (item.contains("id") && item["id"].is_number_integer()) {
        known_ids.insert(item["id"].get<int>());
      }
    }
  }

  std::string best = first.best_digest;
  std::set<int> closed;
  std::map<int, std::string> attempt_digest;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const std::string where = "seq " + std::to_string(e.seq) + ": ";
    if (e.run_id != first.run_id) corrupt_trace(where + "run_id changes mid-trace");
    if (i > 0 && e.seq <= events[i - 1].seq) corrupt_trace(where + "seq is not increasing");
    if (e.event == EventType::Finish && i + 1 != events.size()) {
      corrupt_trace(where + "finish before the end of the trace");
    }
    if (e.event == EventType::Plan && i != 0) corrupt_trace(where + "second plan event");

    if (!is_item_event(e.event)) {
      if (e.best_digest != best) corrupt_trace(where + "best_digest drifted");
      continue;
    }
    if (!e.constraint_id) corrupt_trace(where + "item event without constraint_id");
    const int cid = *e.constraint_id;
    if (!known_ids.empty() && !known_ids.contains(cid)) {
      corrupt_trace(where + "constraint #" + std::to_string(cid) + " is not in the plan");
    }
    if (closed.contains(cid)) {
      corrupt_trace(where + "activity on constraint #" + std::to_string(cid) +
                    " after it passed or was skipped");
    }

    switch (e.event) {
      case EventType::EditAttempt:
        if (e.best_digest != best) corrupt_trace(where + "edit_attempt off the current best");
        attempt_digest[cid] = e.best_digest;
        break;
      case EventType::Accept: {
        if (!attempt_digest.contains(cid)) corrupt_trace(where + "accept without edit_attempt");
        const auto digest = e.payload.value("digest", std::string());
        if (digest.empty() || digest != e.best_digest) {
          corrupt_trace(where + "accept must carry the new digest");
        }
        best = e.best_digest;
        attempt_digest.erase(cid);
        break;
      }
      case EventType::Reject: {
        auto it = attempt_digest.find(cid);
        if (it == attempt_digest.end()) corrupt_trace(where + "reject without edit_attempt");
        if (e.best_digest != it->second) {
          corrupt_trace(where + "reject changed best_digest from its edit_attempt");
        }
        attempt_digest.erase(it);
        break;
      }
      case EventType::CheckPass:
      case EventType::Skip:
        if (e.best_digest != best) corrupt_trace(where + "best_digest drifted");
        closed.insert(cid);
        break;
      default:
        if (e.best_digest != best) corrupt_trace(where + "best_digest drifted");
        break;
    }
  }
}

std::vector<std::string> narrate_trace(const std::vector<TraceEvent>& events) {
  validate_trace(events);
  std::map<int, std::pair<std::string, std::string>> items;  // id -> (kind, question)
  std::vector<std::string> lines;
  const auto& first = events.front();
  if (first.event == EventType::Plan) {
    const auto& checklist = first.payload.value("checklist", Json::object());
    lines.push_back("run " + first.run_id + ": \"" +
                    checklist.value("prompt", std::string()) + "\"");
    for (const auto& item : checklist.value("items", Json::array())) {
      items[item.value("id", 0)] = {item.value("kind", std::string()),
                                    item.value("question", std::string())};
    }
  }

  std::size_t i = 0;
  while (i < events.size()) {
    const auto& e = events[i];
    if (!e.constraint_id) {
      if (e.event == EventType::Finish) {
        const auto& p = e.payload;
        std::ostringstream out;
        out << "finish: rounds=" << p.value("rounds_used", 0)
            << " editor_calls=" << p.value("editor_calls", 0)
            << " passed=" << p.value("passed", 0) << " skipped=" << p.value("skipped", 0)
            << " pending=" << p.value("pending", 0);
        if (p.value("aborted", false)) out << " ABORTED: " << p.value("error", std::string());
        lines.push_back(out.str());
      }
      ++i;
      continue;
    }
    const int round = e.round;
    const int cid = *e.constraint_id;
    const auto& [kind, question] = items[cid];
    std::ostringstream out;
    out << "round " << round << " | #" << cid << ' ' << kind << " | " << question << " | ";
    std::string sep;
    for (; i < events.size() && events[i].constraint_id == cid && events[i].round == round; ++i) {
      const auto& ev = events[i];
      const auto& p = ev.payload;
      switch (ev.event) {
        case EventType::CheckPass:
          out << sep << "passed";
          break;
        case EventType::CheckFail:
          out << sep << "failed (" << p.value("reason", std::string()) << ")";
          break;
        case EventType::Verdict:
          out << sep << "attempt " << p.value("attempt", 0) << ' '
              << p.value("verdict", std::string());
          break;
        case EventType::Accept:
          out << sep << "accepted";
          break;
        case EventType::Reject:
          if (p.value("cause", std::string()) == "edit_rejected") {
            out << sep << "attempt " << p.value("attempt", 0) << " edit rejected";
          } else {
            out << sep << "rejected";
          }
          break;
        case EventType::Skip:
          out << sep << "skipped after " << p.value("attempts", 0) << " attempts";
          break;
        default:
          continue;
      }
      sep = "; ";
    }
    lines.push_back(out.str());
  }
  return lines;
}

}  // namespace refinery
