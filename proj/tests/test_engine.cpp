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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "fake_transport.hpp"
#include "helpers.hpp"
#include "refinery/digest.hpp"
#include "refinery/engine.hpp"
#include "refinery/remote.hpp"
#include "refinery/trace.hpp"

using namespace refinery;
using namespace refinery::testing;

namespace {

struct SimRig {
  std::shared_ptr<SceneStore> store = std::make_shared<SceneStore>();
  std::shared_ptr<AlignmentScorer> scorer = std::make_shared<AlignmentScorer>(store);
  Agents agents;

  explicit SimRig(FailureModel failures = {}, std::shared_ptr<Verifier> verifier = nullptr) {
    agents.planner = std::make_shared<RulePlanner>();
    agents.checker = std::make_shared<SimChecker>(store);
    agents.editor = std::make_shared<SimEditor>(store, failures, 1);
    agents.verifier = verifier ? verifier : std::make_shared<ScoreVerifier>(scorer, 0.0);
    agents.scorer = scorer;
  }
};

class AlwaysWorse final : public Verifier {
 public:
  int calls = 0;
  Verdict compare(const std::string&, const ImageRef&, const ImageRef&) override {
    ++calls;
    return Verdict::Worse;
  }
};

class FixedPlanner final : public Planner {
 public:
  explicit FixedPlanner(Checklist cl) : cl_(std::move(cl)) {}
  Checklist plan(const std::string&) override { return cl_; }

 private:
  Checklist cl_;
};

class ThrowingPlanner final : public Planner {
 public:
  Checklist plan(const std::string&) override {
    throw Error(Errc::BackendUnreachable, "planner down");
  }
};

class RefusingEditor final : public Editor {
 public:
  int calls = 0;
  ImageRef edit(const ImageRef&, const EditInstruction&) override {
    ++calls;
    throw Error(Errc::EditRejected, "refused");
  }
};

class NoopEditor final : public Editor {
 public:
  ImageRef edit(const ImageRef& image, const EditInstruction&) override { return image; }
};

class UnreachableEditor final : public Editor {
 public:
  ImageRef edit(const ImageRef&, const EditInstruction&) override {
    throw Error(Errc::BackendUnreachable, "editor down");
  }
};

std::vector<EventType> events_of(const std::vector<TraceEvent>& trace) {
  std::vector<EventType> out;
  for (const auto& e : trace) out.push_back(e.event);
  return out;
}

int count_events(const std::vector<TraceEvent>& trace, EventType type) {
  return static_cast<int>(std::count_if(trace.begin(), trace.end(),
                                        [&](const TraceEvent& e) { return e.event == type; }));
}

}  // namespace

TEST_CASE("five pandas from four") {
  SimRig rig;
  const ImageRef initial = rig.store->put(pandas(4));
  const RefineOutcome out = refine("a photo of five pandas", initial, rig.agents, RefineConfig{});
  REQUIRE(out.ok());
  CHECK(category_count(rig.store->get(out.final_image), "panda") == 5);
  CHECK(out.state.count(ItemStatus::Passed) == 2);
  CHECK(out.state.editor_calls == 1);
  CHECK(out.state.accepted_scores == std::vector<double>{0.5, 1.0});
  CHECK(out.state.round == 2);
  CHECK_NOTHROW(validate_trace(out.trace));

  const auto lines = narrate_trace(out.trace);
  const auto accepted = std::count_if(lines.begin(), lines.end(), [](const std::string& l) {
    return l.find("accepted") != std::string::npos;
  });
  CHECK(accepted == 1);
  CHECK(lines.front().find("a photo of five pandas") != std::string::npos);
  CHECK(lines.back().rfind("finish:", 0) == 0);
}

TEST_CASE("already aligned image is returned untouched") {
  SimRig rig;
  const ImageRef initial = rig.store->put(pandas(5));
  const RefineOutcome out = refine("five pandas", initial, rig.agents, RefineConfig{});
  CHECK(out.final_image == initial);
  CHECK(out.state.editor_calls == 0);
  CHECK(out.state.round == 1);
  CHECK(events_of(out.trace) == std::vector<EventType>{EventType::Plan, EventType::CheckPass,
                                                       EventType::CheckPass, EventType::Finish});
}

TEST_CASE("escape hatch after K rejected color fixes") {
  SimRig rig(FailureModel{0.0, {{OpKind::SetColor, 1.0}}});
  const ImageRef initial = rig.store->put(scene_of({obj("chair", 8, 8, "orange")}));
  const RefineOutcome out = refine("a yellow chair", initial, rig.agents, RefineConfig{});
  REQUIRE(out.ok());
  CHECK(out.state.statuses.at(1) == ItemStatus::Passed);
  CHECK(out.state.statuses.at(2) == ItemStatus::Skipped);
  CHECK(out.state.round == 1);
  CHECK(out.state.editor_calls == 2);
  CHECK(out.final_image == initial);
  CHECK(count_events(out.trace, EventType::Reject) == 2);
  CHECK_NOTHROW(validate_trace(out.trace));
}

TEST_CASE("always-worse verifier: one round, K calls per failing item") {
  auto worse = std::make_shared<AlwaysWorse>();
  SimRig rig({}, worse);
  const ImageRef initial = rig.store->put(pandas(3));
  const RefineOutcome out =
      refine("five pandas and a red kite", initial, rig.agents, RefineConfig{5, 3, 0.0});
  // kite presence, kite color and panda count fail.
  CHECK(out.state.round == 1);
  CHECK(out.state.editor_calls == 3 * 3);
  CHECK(worse->calls == 9);
  CHECK(out.state.count(ItemStatus::Skipped) == 3);
  CHECK(out.final_image == initial);
}

TEST_CASE("attempt_fix outcomes") {
  SimRig rig;
  TraceLog trace("t");
  RefineState state;
  state.prompt = "five pandas";
  state.best = rig.store->put(pandas(4));
  const Constraint c = count("panda", 5, 2);
  state.statuses[2] = ItemStatus::Pending;
  const EditInstruction fix = sim_refine_instruction(c, pandas(4));

  SUBCASE("first attempt accepted") {
    const ImageRef before = state.best;
    attempt_fix(state, c, fix, rig.agents, RefineConfig{}, trace);
    CHECK(state.editor_calls == 1);
    CHECK(state.statuses[2] == ItemStatus::Pending);
    CHECK(state.best != before);
  }
  SUBCASE("both attempts rejected") {
    rig.agents.verifier = std::make_shared<AlwaysWorse>();
    attempt_fix(state, c, fix, rig.agents, RefineConfig{}, trace);
    CHECK(state.editor_calls == 2);
    CHECK(state.statuses[2] == ItemStatus::Skipped);
  }
  SUBCASE("identical digest is Same without a verifier call") {
    auto worse = std::make_shared<AlwaysWorse>();
    rig.agents.verifier = worse;
    rig.agents.editor = std::make_shared<NoopEditor>();
    attempt_fix(state, c, fix, rig.agents, RefineConfig{}, trace);
    CHECK(worse->calls == 0);
    CHECK(state.statuses[2] == ItemStatus::Skipped);
    const auto events = std::move(trace).take();
    for (const auto& e : events) {
      if (e.event == EventType::Verdict) {
        CHECK(e.payload["verdict"] == "same");
        CHECK(e.payload["short_circuit"] == true);
      }
    }
  }
  SUBCASE("editor refusals count as attempts without verification") {
    auto worse = std::make_shared<AlwaysWorse>();
    auto refusing = std::make_shared<RefusingEditor>();
    rig.agents.verifier = worse;
    rig.agents.editor = refusing;
    attempt_fix(state, c, fix, rig.agents, RefineConfig{}, trace);
    CHECK(refusing->calls == 2);
    CHECK(state.editor_calls == 2);
    CHECK(worse->calls == 0);
    CHECK(state.statuses[2] == ItemStatus::Skipped);
  }
  SUBCASE("non-pending items are refused") {
    state.statuses[2] = ItemStatus::Skipped;
    CHECK_THROWS_AS(attempt_fix(state, c, fix, rig.agents, RefineConfig{}, trace), Error);
  }
}

TEST_CASE("backend failure keeps the best image so far") {
  SimRig rig;
  rig.agents.editor = std::make_shared<UnreachableEditor>();
  const ImageRef initial = rig.store->put(pandas(4));
  const RefineOutcome out = refine("five pandas", initial, rig.agents, RefineConfig{});
  REQUIRE_FALSE(out.ok());
  CHECK(out.error->code() == Errc::BackendUnreachable);
  CHECK(out.final_image == initial);
  CHECK(out.trace.back().event == EventType::Finish);
  CHECK(out.trace.back().payload["aborted"] == true);
  CHECK_NOTHROW(validate_trace(out.trace));
}

TEST_CASE("planner failure aborts before any check") {
  SimRig rig;
  rig.agents.planner = std::make_shared<ThrowingPlanner>();
  const ImageRef initial = rig.store->put(pandas(4));
  const RefineOutcome out = refine("five pandas", initial, rig.agents, RefineConfig{});
  REQUIRE_FALSE(out.ok());
  CHECK(out.error->code() == Errc::PlannerFailed);
  CHECK(events_of(out.trace) == std::vector<EventType>{EventType::Finish});
  CHECK_NOTHROW(validate_trace(out.trace));
}

TEST_CASE("invalid inputs are rejected up front") {
  SimRig rig;
  const ImageRef initial = rig.store->put(pandas(4));
  CHECK_THROWS_AS(refine("five pandas", initial, rig.agents, RefineConfig{0, 2, 0.0}), Error);
  Agents missing = rig.agents;
  missing.editor.reset();
  CHECK_THROWS_AS(refine("five pandas", initial, missing, RefineConfig{}), Error);
}

TEST_CASE("run ids are derived from prompt and image") {
  SimRig rig;
  const ImageRef initial = rig.store->put(pandas(4));
  const auto a = refine("five pandas", initial, rig.agents, RefineConfig{});
  const auto b = refine("five pandas", initial, rig.agents, RefineConfig{});
  CHECK(a.trace.front().run_id == b.trace.front().run_id);
  CHECK(a.trace.front().run_id == derive_run_id("five pandas", initial));
  CHECK(a.trace.front().run_id.size() == 12);
  CHECK(refine("five pandas", initial, rig.agents, RefineConfig{}, "mine").trace.front().run_id ==
        "mine");
}

TEST_CASE("remote agents drive the same loop") {
  const auto dir = std::filesystem::temp_directory_path() / "refinery-engine-remote";
  std::filesystem::create_directories(dir);
  const auto src = (dir / "in.png").string();
  write_file_bytes(src, "v0");

  auto checker_backend = std::make_shared<FakeTransport>();
  auto editor_backend = std::make_shared<FakeTransport>();
  auto verifier_backend = std::make_shared<FakeTransport>();
  checker_backend->push(R"(```json
{"passed": false, "reason": "Add one more panda"}
```)");
  editor_backend->push([](const ChatRequest&) {
    return ChatResponse{"", ImagePart{"image/png", base64_encode("v1")}};
  });
  verifier_backend->push("The second image is better.");
  checker_backend->push(R"({"passed": true, "reason": ""})");

  Agents agents;
  agents.planner = std::make_shared<FixedPlanner>(checklist("five pandas", {count("panda", 5)}));
  agents.checker = std::make_shared<RemoteChecker>(checker_backend, "vlm");
  agents.editor = std::make_shared<RemoteEditor>(editor_backend, "edit", dir.string());
  agents.verifier = std::make_shared<RemoteVerifier>(verifier_backend, "vlm");

  const RefineOutcome out = refine("five pandas", file_image(src), agents, RefineConfig{});
  REQUIRE(out.ok());
  CHECK(read_file_bytes(out.final_image.locator) == "v1");
  CHECK(out.state.statuses.at(1) == ItemStatus::Passed);
  CHECK(*editor_backend->requests.at(0).messages.at(1).parts.at(0).text ==
        "Edit instruction: Add one more panda");
  CHECK(out.state.accepted_scores.empty());
  std::filesystem::remove_all(dir);
}

// --- trace ------------------------------------------------------------------

TEST_CASE("trace JSONL round trip") {
  SimRig rig;
  const RefineOutcome out =
      refine("five pandas", rig.store->put(pandas(4)), rig.agents, RefineConfig{});
  const std::string text = to_jsonl(out.trace);
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(out.trace.size()));
  CHECK(parse_trace(text) == out.trace);

  const Json first = Json::parse(text.substr(0, text.find('\n')));
  for (const char* key : {"run_id", "seq", "round", "constraint_id", "event", "payload",
                          "best_digest"}) {
    CHECK(first.contains(key));
  }
  CHECK(first["constraint_id"].is_null());
}

TEST_CASE("trace validation catches corruption") {
  SimRig rig;
  const auto good = refine("five pandas", rig.store->put(pandas(4)), rig.agents, RefineConfig{}).trace;
  auto code = [](const std::vector<TraceEvent>& t) {
    try {
      validate_trace(t);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::InvalidArgument;
  };

  CHECK_THROWS_WITH_AS(parse_trace(""), doctest::Contains("CorruptTrace"), Error);
  CHECK_THROWS_AS(parse_trace("{not json}\n"), Error);

  auto swapped = good;
  std::swap(swapped[1].seq, swapped[2].seq);
  CHECK(code(swapped) == Errc::CorruptTrace);

  auto no_finish = good;
  no_finish.pop_back();
  CHECK(code(no_finish) == Errc::CorruptTrace);

  auto after_pass = good;
  TraceEvent extra = after_pass[1];  // check_pass for item 1 in round 1
  REQUIRE(extra.event == EventType::CheckPass);
  extra.event = EventType::CheckFail;
  extra.round = 2;
  after_pass.insert(after_pass.end() - 1, extra);
  for (std::size_t i = 0; i < after_pass.size(); ++i) after_pass[i].seq = static_cast<int>(i);
  CHECK(code(after_pass) == Errc::CorruptTrace);

  auto drifted = good;
  for (auto& e : drifted) {
    if (e.event == EventType::Accept) e.best_digest = "0000";
  }
  CHECK(code(drifted) == Errc::CorruptTrace);

  auto mixed = good;
  mixed.back().run_id = "other";
  CHECK(code(mixed) == Errc::CorruptTrace);
}

TEST_CASE("rejects must preserve the best digest") {
  auto worse = std::make_shared<AlwaysWorse>();
  SimRig rig({}, worse);
  auto trace = refine("five pandas", rig.store->put(pandas(4)), rig.agents, RefineConfig{}).trace;
  CHECK_NOTHROW(validate_trace(trace));
  for (auto& e : trace) {
    if (e.event == EventType::Reject) e.best_digest = "ffff";
  }
  CHECK_THROWS_AS(validate_trace(trace), Error);
}
