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

// Command-line front end: plan, refine, simulate, report.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "refinery/config.hpp"
#include "refinery/digest.hpp"
#include "refinery/engine.hpp"
#include "refinery/planner.hpp"
#include "refinery/simulate.hpp"
#include "refinery/trace.hpp"

namespace {

using namespace refinery;

constexpr int kExitOk = 0;
constexpr int kExitAborted = 1;
constexpr int kExitUsage = 2;

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string fixed(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void print_checklist(const Checklist& checklist, bool json) {
  if (json) {
    std::cout << Json(checklist).dump(2) << "\n";
    return;
  }
  for (const auto& c : checklist.items) {
    std::cout << pad(std::to_string(c.id) + ".", 4) << pad(std::string(kind_name(c.kind)), 18)
              << c.question << "\n";
  }
}

// --- plan -------------------------------------------------------------------

struct PlanArgs {
  std::string prompt;
  std::string planner = "rule";
  std::string config;
  bool json = false;
};

int cmd_plan(const PlanArgs& a) {
  Checklist checklist;
  if (a.planner == "remote") {
    const AppConfig config = load_config(discover_config_path(a.config));
    auto it = config.endpoints.find("planner");
    if (it == config.endpoints.end()) {
      throw Error(Errc::InvalidArgument, "config has no 'planner' endpoint");
    }
    HttpChatTransport transport(it->second);
    checklist = plan_remote(a.prompt, transport, it->second.model_name);
  } else {
    checklist = plan_rule(a.prompt);
  }
  print_checklist(checklist, a.json);
  return kExitOk;
}

// --- refine -----------------------------------------------------------------

struct RefineArgs {
  std::string prompt;
  std::string image;
  std::string config;
  std::string trace_out;
  std::string out;
  std::optional<int> max_rounds;
  std::optional<int> k;
  std::optional<double> epsilon;
  std::optional<double> p_fail;
  std::optional<std::uint64_t> seed;
  bool json = false;
};

int cmd_refine(const RefineArgs& a) {
  AppConfig config = load_config(discover_config_path(a.config));
  if (a.max_rounds) config.refine.max_rounds = *a.max_rounds;
  if (a.k) config.refine.retry_budget_k = *a.k;
  if (a.epsilon) config.refine.verifier_epsilon = *a.epsilon;
  if (a.p_fail) config.p_fail = *a.p_fail;
  if (a.seed) config.seed = *a.seed;
  validate_config(config.refine);

  const std::string out_path = a.out.empty() ? refined_path(a.image) : a.out;
  const std::string work_dir = std::filesystem::path(out_path).parent_path().string();
  Backends backends = build_backends(config, work_dir.empty() ? "." : work_dir);
  const bool sim = config.mode == RunMode::Sim;
  const ImageRef initial = sim ? backends.store->load_file(a.image) : file_image(a.image);

  const auto start = std::chrono::steady_clock::now();
  RefineOutcome outcome = refine(a.prompt, initial, backends.agents, config.refine);
  const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();

  // The best image so far is saved even when the run aborted.
  if (sim) {
    backends.store->save_file(outcome.final_image, out_path);
  } else {
    write_file_bytes(out_path, read_file_bytes(outcome.final_image.locator));
  }
  const std::string run_id = outcome.trace.empty() ? "" : outcome.trace.front().run_id;
  const std::string trace_path =
      !a.trace_out.empty()
          ? a.trace_out
          : (std::filesystem::path(work_dir.empty() ? "." : work_dir) / (run_id + ".trace.jsonl"))
                .string();
  write_trace(trace_path, outcome.trace);

  const RefineState& st = outcome.state;
  Json report{{"run_id", run_id},
              {"prompt", a.prompt},
              {"rounds_used", st.round},
              {"editor_calls", st.editor_calls},
              {"statuses",
               {{"passed", st.count(ItemStatus::Passed)},
                {"skipped", st.count(ItemStatus::Skipped)},
                {"pending", st.count(ItemStatus::Pending)}}},
              {"output", out_path},
              {"trace", trace_path},
              {"wall_time_ms", wall_ms}};
  if (sim) {
    const Checklist& cl = st.checklist;
    if (!cl.items.empty()) {
      report["initial_score"] = alignment_score(backends.store->get(initial), cl);
      report["final_score"] = alignment_score(backends.store->get(outcome.final_image), cl);
    }
  }
  if (outcome.error) report["error"] = outcome.error->what();

  if (a.json) {
    std::cout << report.dump(2) << "\n";
  } else {
    std::cout << "run " << report["run_id"].get<std::string>() << "\n"
              << "  rounds used   " << st.round << "\n"
              << "  editor calls  " << st.editor_calls << "\n"
              << "  passed        " << st.count(ItemStatus::Passed) << "\n"
              << "  skipped       " << st.count(ItemStatus::Skipped) << "\n"
              << "  pending       " << st.count(ItemStatus::Pending) << "\n";
    if (report.contains("final_score")) {
      std::cout << "  score         " << fixed(report["initial_score"].get<double>()) << " -> "
                << fixed(report["final_score"].get<double>()) << "\n";
    }
    std::cout << "  output        " << out_path << "\n"
              << "  trace         " << trace_path << "\n";
  }
  if (outcome.error) {
    std::cerr << "aborted: " << outcome.error->what() << "\n";
    return kExitAborted;
  }
  return kExitOk;
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  int corpus_size = 200;
  std::string violations = "1..3";
  double p_fail = 0.0;
  int k = 2;
  int max_rounds = 5;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<std::string> fail_ops;
  bool json = false;
};

std::pair<int, int> parse_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    std::size_t used = 0;
    if (dots == std::string::npos) {
      const int v = std::stoi(text, &used);
      if (used == text.size()) return {v, v};
    } else {
      const std::string lo = text.substr(0, dots), hi = text.substr(dots + 2);
      std::size_t used_hi = 0;
      const int a = std::stoi(lo, &used), b = std::stoi(hi, &used_hi);
      if (used == lo.size() && used_hi == hi.size()) return {a, b};
    }
  } catch (const std::exception&) {
  }
  throw Error(Errc::InvalidArgument, "violations must look like 2 or 1..3, got '" + text + "'");
}

int cmd_simulate(const SimulateArgs& a) {
  SimParams p;
  p.corpus_size = a.corpus_size;
  std::tie(p.violations_min, p.violations_max) = parse_range(a.violations);
  p.failures.p_fail = a.p_fail;
  for (const auto& spec : a.fail_ops) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::InvalidArgument, "--fail-op expects op=probability, got '" + spec + "'");
    }
    double prob = 0.0;
    try {
      prob = std::stod(spec.substr(eq + 1));
    } catch (const std::exception&) {
      throw Error(Errc::InvalidArgument, "bad probability in '" + spec + "'");
    }
    p.failures.overrides[parse_op_kind(spec.substr(0, eq))] = prob;
  }
  p.refine = RefineConfig{a.max_rounds, a.k, a.epsilon};
  p.seed = a.seed;
  p.threads = a.threads;

  const SimReport report = simulate(p);
  const Json stats = stats_json(p, report.stats);
  if (a.json) {
    std::cout << stats.dump(2) << "\n";
    return kExitOk;
  }
  const SimStats& s = report.stats;
  std::cout << "runs                      " << s.runs << " (" << s.aborted_runs << " aborted)\n"
            << "mean alignment            " << fixed(s.mean_initial_alignment) << " -> "
            << fixed(s.mean_final_alignment) << "\n"
            << "perfect final             " << fixed(s.perfect_final_rate) << "\n"
            << "mean editor calls         " << fixed(s.mean_editor_calls, 2) << "\n"
            << "mean rounds               " << fixed(s.mean_rounds, 2) << "\n"
            << "fix rate                  "
            << (s.overall.violated ? fixed(double(s.overall.fixed) / s.overall.violated) : "-")
            << " (" << s.overall.fixed << "/" << s.overall.violated << ")\n";
  for (const auto& [kind, t] : s.by_kind) {
    std::cout << "  " << pad(std::string(kind_name(kind)), 24)
              << (t.violated ? fixed(double(t.fixed) / t.violated) : "-") << " (" << t.fixed
              << "/" << t.violated << ")\n";
  }
  std::cout << "skipped items             " << s.skipped_items << "\n"
            << "termination violations    " << s.termination_bound_violations << "\n"
            << "monotonicity violations   " << s.monotonicity_violations << "\n"
            << "trace violations          " << s.trace_violations << "\n";
  return kExitOk;
}

// --- report -----------------------------------------------------------------

int cmd_report(const std::string& path, bool json) {
  const auto events = read_trace(path);
  validate_trace(events);
  const auto lines = narrate_trace(events);
  if (json) {
    std::cout << Json{{"events", events.size()}, {"lines", lines}}.dump(2) << "\n";
  } else {
    for (const auto& line : lines) std::cout << line << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free checklist refinement loop"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "refinery 0.1.0");

  PlanArgs plan;
  auto* plan_cmd = app.add_subcommand("plan", "Print the constraint checklist for a prompt");
  plan_cmd->add_option("prompt", plan.prompt, "Prompt text")->required();
  plan_cmd->add_option("--planner", plan.planner, "rule or remote")
      ->check(CLI::IsMember({"rule", "remote"}));
  plan_cmd->add_option("--config", plan.config, "Config file (remote planner)");
  plan_cmd->add_flag("--json", plan.json, "Emit JSON");

  RefineArgs refine_args;
  auto* refine_cmd = app.add_subcommand("refine", "Refine one image against a prompt");
  refine_cmd->add_option("--prompt", refine_args.prompt, "Prompt text")->required();
  refine_cmd->add_option("--image", refine_args.image, "Scene file (sim) or image file")
      ->required();
  refine_cmd->add_option("--config", refine_args.config, "Config file");
  refine_cmd->add_option("--trace-out", refine_args.trace_out, "Trace path (default: <run_id>.trace.jsonl beside the output)");
  refine_cmd->add_option("--out", refine_args.out, "Output path (default: <stem>.refined<ext>)");
  refine_cmd->add_option("--max-rounds", refine_args.max_rounds, "Override refine.max_rounds");
  refine_cmd->add_option("--k", refine_args.k, "Override refine.k");
  refine_cmd->add_option("--epsilon", refine_args.epsilon, "Override refine.epsilon");
  refine_cmd->add_option("--p-fail", refine_args.p_fail, "Override sim.p_fail");
  refine_cmd->add_option("--seed", refine_args.seed, "Override sim.seed");
  refine_cmd->add_flag("--json", refine_args.json, "Emit JSON");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a seeded simulator corpus");
  sim_cmd->add_option("--corpus-size", sim.corpus_size, "Number of prompts")
      ->capture_default_str();
  sim_cmd->add_option("--violations", sim.violations, "Violations per scene, N or MIN..MAX")
      ->capture_default_str();
  sim_cmd->add_option("--p-fail", sim.p_fail, "Per-primitive failure probability")
      ->capture_default_str();
  sim_cmd->add_option("--k", sim.k, "Attempts per item per round")->capture_default_str();
  sim_cmd->add_option("--max-rounds", sim.max_rounds, "Round limit")->capture_default_str();
  sim_cmd->add_option("--epsilon", sim.epsilon, "Verifier tie band")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Corpus seed")->capture_default_str();
  sim_cmd->add_option("--threads", sim.threads, "Worker threads")->capture_default_str();
  sim_cmd->add_option("--fail-op", sim.fail_ops, "Per-op failure override, e.g. set_color=1");
  sim_cmd->add_flag("--json", sim.json, "Emit JSON");

  std::string trace_path;
  bool report_json = false;
  auto* report_cmd = app.add_subcommand("report", "Validate and narrate a JSONL trace");
  report_cmd->add_option("trace", trace_path, "Trace file")->required();
  report_cmd->add_flag("--json", report_json, "Emit JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*plan_cmd) return cmd_plan(plan);
    if (*refine_cmd) return cmd_refine(refine_args);
    if (*sim_cmd) return cmd_simulate(sim);
    if (*report_cmd) return cmd_report(trace_path, report_json);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
