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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Every threshold is pinned below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "refinery/backends.hpp"
#include "refinery/planner.hpp"
#include "refinery/rng.hpp"
#include "refinery/simulate.hpp"
#include "refinery/trace.hpp"

using namespace refinery;

namespace {

// Pinned tolerances.
constexpr int kCompletenessRuns = 200;
constexpr double kCompletenessWallLimitS = 30.0;
constexpr int kStressRuns = 200;
constexpr int kFixRateRuns = 1000;
constexpr double kFixRatePFail = 0.5;
constexpr int kFixRateK = 2;
constexpr double kFixRateExpected = 0.75;  // 1 - (1 - 0.5)^2
constexpr double kFixRateTolerance = 0.05;
constexpr std::size_t kGoldenPrompts = 20;
constexpr double kGoldenWallLimitS = 1.0;
constexpr int kFuzzCases = 10000;
constexpr std::size_t kFuzzMaxLength = 256;
constexpr std::uint64_t kSeed = 20260115;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

class AlwaysWorse final : public Verifier {
 public:
  Verdict compare(const std::string&, const ImageRef&, const ImageRef&) override {
    return Verdict::Worse;
  }
};

int attempts_on(const std::vector<TraceEvent>& trace, int constraint_id) {
  int n = 0;
  for (const auto& e : trace) {
    n += e.event == EventType::EditAttempt && e.constraint_id == constraint_id;
  }
  return n;
}

// Trace validation through the same path the report command uses.
int invalid_traces(const SimReport& report) {
  int bad = 0;
  for (const auto& run : report.runs) {
    try {
      narrate_trace(run.trace);
    } catch (const Error&) {
      ++bad;
    }
  }
  return bad;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, int>> trace_checks;  // (criterion, invalid traces)

  // 1 + 2: completeness and monotonicity under a perfect editor.
  {
    SimParams p;
    p.corpus_size = kCompletenessRuns;
    p.violations_min = 1;
    p.violations_max = 3;
    p.seed = kSeed;
    p.keep_traces = true;
    const auto start = Clock::now();
    const SimReport r = simulate(p);
    const double wall = seconds_since(start);

    int perfect = 0;
    for (const auto& run : r.runs) perfect += run.final_score == 1.0 && !run.error;
    report(1, "completeness", perfect == kCompletenessRuns && wall < kCompletenessWallLimitS,
           fmt("%d/%d runs reach alignment 1.0 in %.2f s (limit %.0f s)", perfect,
               kCompletenessRuns, wall, kCompletenessWallLimitS));

    int non_monotone = 0;
    std::size_t accepts = 0;
    for (const auto& run : r.runs) {
      const auto& s = run.state.accepted_scores;
      accepts += s.empty() ? 0 : s.size() - 1;
      for (std::size_t i = 1; i < s.size(); ++i) {
        if (!(s[i] > s[i - 1])) {
          ++non_monotone;
          break;
        }
      }
    }
    report(2, "monotonicity", non_monotone == 0,
           fmt("%d runs with a non-increasing score sequence across %zu accepts", non_monotone,
               accepts));
    trace_checks.emplace_back("1-2", invalid_traces(r));
  }

  // 3: termination bound with a verifier that rejects everything.
  {
    SimParams p;
    p.corpus_size = kStressRuns;
    p.seed = kSeed + 3;
    p.keep_traces = true;
    p.verifier = [](std::shared_ptr<Scorer>) { return std::make_shared<AlwaysWorse>(); };
    const SimReport r = simulate(p);
    int off = 0;
    for (const auto& run : r.runs) {
      const int expected = p.refine.retry_budget_k * static_cast<int>(run.initially_failing.size());
      if (run.state.round != 1 || run.state.editor_calls != expected || run.error) ++off;
    }
    report(3, "termination bound", off == 0,
           fmt("%d/%d runs deviate from one round and K x failing editor calls", off,
               kStressRuns));
    trace_checks.emplace_back("3", invalid_traces(r));
  }

  // 4: escape hatch when every SetColor primitive fails.
  {
    SimParams p;
    p.corpus_size = kStressRuns;
    p.seed = kSeed + 4;
    p.keep_traces = true;
    p.failures.overrides[OpKind::SetColor] = 1.0;
    const SimReport r = simulate(p);
    int color_runs = 0, off = 0;
    for (const auto& run : r.runs) {
      bool has_color_violation = false;
      bool ok = !run.error;
      for (const auto& c : run.checklist.items) {
        const bool failing = std::find(run.initially_failing.begin(), run.initially_failing.end(),
                                       c.id) != run.initially_failing.end();
        const ItemStatus st = run.state.statuses.at(c.id);
        if (c.kind == ConstraintKind::ColorBinding && failing) {
          has_color_violation = true;
          ok &= st == ItemStatus::Skipped &&
                attempts_on(run.trace, c.id) == p.refine.retry_budget_k;
        } else {
          ok &= st == ItemStatus::Passed;
        }
      }
      color_runs += has_color_violation;
      off += !ok;
    }
    report(4, "escape hatch", off == 0 && color_runs > 0,
           fmt("%d/%d runs deviate; %d runs carried color violations", off, kStressRuns,
               color_runs));
    trace_checks.emplace_back("4", invalid_traces(r));
  }

  // 5: stochastic fix rate against the analytic 1 - (1 - p)^K.
  {
    SimParams p;
    p.corpus_size = kFixRateRuns;
    p.violations_min = 1;
    p.violations_max = 1;
    p.failures.p_fail = kFixRatePFail;
    p.refine.retry_budget_k = kFixRateK;
    p.seed = kSeed + 5;
    p.keep_traces = true;
    const SimReport r = simulate(p);
    const auto& t = r.stats.overall;
    const double rate = static_cast<double>(t.fixed) / t.violated;
    report(5, "fix rate", std::fabs(rate - kFixRateExpected) <= kFixRateTolerance,
           fmt("%d/%d fixed = %.4f, expected %.2f +/- %.2f", t.fixed, t.violated, rate,
               kFixRateExpected, kFixRateTolerance));
    trace_checks.emplace_back("5", invalid_traces(r));
  }

  // 6: golden planner corpus, byte-exact.
  {
    const Json corpus = Json::parse(read_text(REFINERY_FIXTURE_DIR "/planner_golden.json"));
    const auto start = Clock::now();
    std::size_t matched = 0;
    for (const auto& entry : corpus) {
      matched += canonical_json(plan_rule(entry["prompt"].get<std::string>())) ==
                 entry["expected_checklist"].dump();
    }
    const double wall = seconds_since(start);
    report(6, "planner golden corpus",
           corpus.size() == kGoldenPrompts && matched == kGoldenPrompts && wall < kGoldenWallLimitS,
           fmt("%zu/%zu prompts match in %.4f s (limit %.0f s)", matched, corpus.size(), wall,
               kGoldenWallLimitS));
  }

  // 7: wire robustness of the checker JSON parser.
  {
    int crashes = 0;
    auto typed = [&](const std::string& raw) -> std::optional<Errc> {
      try {
        parse_check_json(raw);
        return std::nullopt;
      } catch (const Error& e) {
        return e.code();
      } catch (...) {
        ++crashes;
        return Errc::InvalidArgument;
      }
    };

    Rng rng(kSeed + 7);
    const std::string alphabet = "{}[]\":,\\ \n\ttruefalsnpassedreason0123456789.-";
    for (int i = 0; i < kFuzzCases; ++i) {
      std::string s(rng.index(kFuzzMaxLength + 1), '\0');
      const bool structured = i % 2 == 1;
      for (auto& ch : s) {
        ch = structured ? alphabet[rng.index(alphabet.size())]
                        : static_cast<char>(rng.index(256));
      }
      typed(s);
    }

    const std::string fixture =
        R"({"passed": false, "reason": "Change the number of notes to 4, add an orange note"})";
    const CheckResult expected{false, "Change the number of notes to 4, add an orange note"};
    bool fixture_ok = false;
    try {
      fixture_ok = parse_check_json(fixture) == expected;
    } catch (...) {
    }

    const std::vector<std::string> wrappers = {
        fixture,
        "```json\n" + fixture + "\n```",
        "```\n" + fixture + "\n```",
        "Sure! Here is my answer: " + fixture,
        fixture + "\nLet me know if you need anything else.",
        "Thinking... {draft} " + fixture,
        "<answer>" + fixture + "</answer>",
        "  \n\t" + fixture + "  \n",
        "Result:\n```json\n" + fixture + "\n```\nDone.",
        R"({"reason": "Change the number of notes to 4, add an orange note", "passed": false})",
        R"({"passed":false,"reason":"Change the number of notes to 4, add an orange note","confidence":0.9})",
        "json " + fixture,
        "The JSON is `" + fixture + "`.",
        "{\n  \"passed\": false,\n  \"reason\": \"Change the number of notes to 4, add an orange note\"\n}",
        "I considered {\"a\": [1, 2]} but the answer is " + fixture,
        "> " + fixture,
        "\xEF\xBB\xBF" + fixture,
        "Answer (JSON): " + fixture + " // end",
        "[" + fixture + "]",
        "**Output:**\n\n" + fixture,
    };
    int wrappers_ok = 0;
    for (const auto& w : wrappers) {
      try {
        wrappers_ok += parse_check_json(w) == expected;
      } catch (...) {
      }
    }

    const std::vector<std::pair<std::string, Errc>> malformed = {
        {R"({"pass": "yes"})", Errc::SchemaMismatch},
        {R"({"passed": "false", "reason": ""})", Errc::SchemaMismatch},
        {R"({"passed": false})", Errc::SchemaMismatch},
        {R"({"passed": false, "reason": 4})", Errc::SchemaMismatch},
        {"no json here", Errc::NoJsonFound},
        {"{\"passed\": false, \"reason\": \"unterminated", Errc::NoJsonFound},
        {"", Errc::NoJsonFound},
        {"[1, 2, 3]", Errc::NoJsonFound},
    };
    int malformed_ok = 0;
    for (const auto& [raw, code] : malformed) malformed_ok += typed(raw) == code;

    const bool ok = crashes == 0 && fixture_ok && wrappers_ok == 20 &&
                    malformed_ok == static_cast<int>(malformed.size());
    report(7, "wire robustness", ok,
           fmt("%d fuzz cases, %d untyped failures; fixture %s; %d/20 wrappers; %d/%zu "
               "malformed inputs typed",
               kFuzzCases, crashes, fixture_ok ? "exact" : "WRONG", wrappers_ok, malformed_ok,
               malformed.size()));
  }

  // 8: every trace produced above validates.
  {
    int bad = 0;
    std::string detail;
    for (const auto& [label, n] : trace_checks) {
      bad += n;
      detail += (detail.empty() ? "" : ", ") + std::string("criteria ") + label + ": " +
                std::to_string(n);
    }
    report(8, "trace integrity", bad == 0, "invalid traces by source (" + detail + ")");
  }

  return failures == 0 ? 0 : 1;
}
