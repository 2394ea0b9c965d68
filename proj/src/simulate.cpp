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

#include "refinery/simulate.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string_view>
#include <mutex>
#include <thread>

#include "refinery/lexicon.hpp"
#include "refinery/planner.hpp"
#include "refinery/rng.hpp"

namespace refinery {

namespace {

// Nouns whose singular/plural forms round-trip through the lexicon.
constexpr std::array<std::string_view, 32> kObjects = {
    "apple", "panda",  "cat",    "dog",    "horse",  "bird",   "chair",  "table",
    "lamp",  "vase",   "clock",  "book",   "cup",    "bottle", "kite",   "boat",
    "car",   "truck",  "train",  "tree",   "flower", "house",  "bench",  "ball",
    "hat",   "shoe",   "guitar", "drum",   "candle", "pillow", "rabbit", "duck"};
constexpr std::array<std::string_view, 6> kSigns = {"sign",   "poster", "banner",
                                                    "plaque", "placard", "billboard"};
constexpr std::array<std::string_view, 8> kWords = {"OPEN", "HELLO", "CAFE", "SALE",
                                                    "EXIT", "WELCOME", "JAZZ", "FRESH"};
constexpr std::array<std::string_view, 6> kStyles = {"watercolor", "cyberpunk", "anime",
                                                     "sketch",     "impressionist", "pastel"};
constexpr std::array<std::string_view, 4> kNumerals = {"two", "three", "four", "five"};
constexpr std::array<std::string_view, 4> kRelations = {"to the left of", "to the right of",
                                                        "above", "below"};

template <class Seq>
std::string pick(Rng& rng, const Seq& seq) {
  return std::string(seq[rng.index(seq.size())]);
}

class CategoryDeck {
 public:
  explicit CategoryDeck(Rng& rng) : deck_(kObjects.begin(), kObjects.end()) {
    for (std::size_t i = deck_.size(); i > 1; --i) std::swap(deck_[i - 1], deck_[rng.index(i)]);
  }
  std::string draw() { return std::string(deck_.at(next_++)); }

 private:
  std::vector<std::string_view> deck_;
  std::size_t next_ = 0;
};

std::string article(const std::string& word) {
  return std::string_view("aeiou").find(word.front()) != std::string_view::npos ? "an " : "a ";
}

double mean(double sum, int n) { return n == 0 ? 0.0 : sum / n; }

}  // namespace

void validate_sim_params(const SimParams& p) {
  auto bad = [](const std::string& msg) { throw Error(Errc::InvalidArgument, msg); };
  if (p.corpus_size < 1) bad("corpus size must be at least 1");
  if (p.violations_min < 1 || p.violations_max < p.violations_min || p.violations_max > 3) {
    bad("violations must satisfy 1 <= min <= max <= 3");
  }
  auto probability = [&](double v) {
    if (!(v >= 0.0 && v <= 1.0)) bad("failure probabilities must lie in [0, 1]");
  };
  probability(p.failures.p_fail);
  for (const auto& [kind, v] : p.failures.overrides) probability(v);
  validate_config(p.refine);
  if (p.threads < 1) bad("threads must be at least 1");
}

std::string generate_prompt(std::uint64_t seed) {
  Rng rng(seed);
  CategoryDeck deck(rng);
  std::vector<std::string> clauses;
  bool have_text = false;
  const std::size_t n_clauses = 3 + rng.index(2);
  while (clauses.size() < n_clauses) {
    switch (rng.index(5)) {
      case 0: {
        const auto noun = deck.draw();
        clauses.push_back(article(noun) + noun);
        break;
      }
      case 1:
        clauses.push_back(pick(rng, kNumerals) + " " + lexicon::pluralize(deck.draw()));
        break;
      case 2: {
        const auto color = pick(rng, lexicon::kColors);
        clauses.push_back(article(color) + color + " " + deck.draw());
        break;
      }
      case 3: {
        const auto subject = deck.draw();
        const auto object = deck.draw();
        clauses.push_back(article(subject) + subject + " " + pick(rng, kRelations) + " " +
                          article(object) + object);
        break;
      }
      case 4: {
        if (have_text) break;
        have_text = true;
        const auto sign = pick(rng, kSigns);
        clauses.push_back(article(sign) + sign + " that reads \"" + pick(rng, kWords) + "\"");
        break;
      }
    }
  }
  std::string prompt = "a photo of ";
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    if (i > 0) prompt += i + 1 == clauses.size() ? " and " : ", ";
    prompt += clauses[i];
  }
  if (rng.bernoulli(0.3)) prompt += ", in " + pick(rng, kStyles) + " style";
  return prompt;
}

SimRun simulate_one(const SimParams& params, int index) {
  const auto idx = static_cast<std::uint64_t>(index);
  SimRun run;
  run.index = index;

  // Redraw the prompt until the requested number of violations fits it.
  Scene corrupted;
  for (std::uint64_t attempt = 0;; ++attempt) {
    if (attempt == 64) throw std::logic_error("corpus generator cannot satisfy violation count");
    Rng rng(derive_seed({params.seed, idx, attempt, 1}));
    const int span = params.violations_max - params.violations_min + 1;
    const int violations = params.violations_min + static_cast<int>(rng.index(span));
    run.prompt = generate_prompt(derive_seed({params.seed, idx, attempt, 2}));
    run.checklist = plan_rule(run.prompt);
    for (const auto& c : run.checklist.items) {
      if (c.kind == ConstraintKind::FreeForm) {
        throw std::logic_error("generated prompt left the grammar: " + run.prompt);
      }
    }
    try {
      const Scene truth =
          build_satisfying_scene(run.checklist, derive_seed({params.seed, idx, attempt, 3}));
      corrupted = corrupt(truth, run.checklist, violations,
                          derive_seed({params.seed, idx, attempt, 4}));
      break;
    } catch (const Error& e) {
      if (e.code() != Errc::CorruptionInfeasible) throw;
    }
  }
  for (const auto& c : run.checklist.items) {
    if (!eval_constraint(corrupted, c)) run.initially_failing.push_back(c.id);
  }
  run.initial_score = alignment_score(corrupted, run.checklist);

  auto store = std::make_shared<SceneStore>();
  auto scorer = std::make_shared<AlignmentScorer>(store);
  Agents agents;
  agents.planner = std::make_shared<RulePlanner>();
  agents.checker = std::make_shared<SimChecker>(store);
  agents.editor = std::make_shared<SimEditor>(store, params.failures,
                                              derive_seed({params.seed, idx, 5}));
  agents.verifier = params.verifier
                        ? params.verifier(scorer)
                        : std::make_shared<ScoreVerifier>(scorer, params.refine.verifier_epsilon);
  agents.scorer = scorer;

  char run_id[32];
  std::snprintf(run_id, sizeof run_id, "sim-%06d", index);
  RefineOutcome outcome =
      refine(run.prompt, store->put(corrupted), agents, params.refine, run_id);
  run.final_score = alignment_score(store->get(outcome.final_image), run.checklist);
  run.state = std::move(outcome.state);
  run.error = std::move(outcome.error);
  try {
    validate_trace(outcome.trace);
  } catch (const Error& e) {
    run.trace_error = e.what();
  }
  if (params.keep_traces) run.trace = std::move(outcome.trace);
  return run;
}

SimStats aggregate(const SimParams& params, const std::vector<SimRun>& runs) {
  SimStats s;
  double initial = 0.0, final_sum = 0.0, calls = 0.0, rounds = 0.0;
  int perfect = 0;
  const auto& cfg = params.refine;
  for (const auto& run : runs) {
    ++s.runs;
    if (run.error) ++s.aborted_runs;
    initial += run.initial_score;
    final_sum += run.final_score;
    if (run.final_score == 1.0) ++perfect;
    calls += run.state.editor_calls;
    rounds += run.state.round;
    s.skipped_items += run.state.count(ItemStatus::Skipped);

    const long bound = static_cast<long>(cfg.max_rounds) * cfg.retry_budget_k *
                       static_cast<long>(run.checklist.items.size());
    if (run.state.round > cfg.max_rounds || run.state.editor_calls > bound) {
      ++s.termination_bound_violations;
    }
    const auto& scores = run.state.accepted_scores;
    if (std::adjacent_find(scores.begin(), scores.end(), std::greater_equal<>()) !=
        scores.end()) {
      ++s.monotonicity_violations;
    }
    if (run.trace_error) ++s.trace_violations;

    for (int id : run.initially_failing) {
      const auto kind = run.checklist.items.at(id - 1).kind;
      auto it = run.state.statuses.find(id);
      const bool fixed = it != run.state.statuses.end() && it->second == ItemStatus::Passed;
      for (KindTally* t : {&s.overall, &s.by_kind[kind]}) {
        ++t->violated;
        if (fixed) ++t->fixed;
      }
    }
  }
  s.mean_initial_alignment = mean(initial, s.runs);
  s.mean_final_alignment = mean(final_sum, s.runs);
  s.perfect_final_rate = mean(perfect, s.runs);
  s.mean_editor_calls = mean(calls, s.runs);
  s.mean_rounds = mean(rounds, s.runs);
  return s;
}

SimReport simulate(const SimParams& params) {
  validate_sim_params(params);
  SimReport report;
  report.params = params;
  report.runs.resize(static_cast<std::size_t>(params.corpus_size));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < params.corpus_size; i = next++) {
      try {
        report.runs[static_cast<std::size_t>(i)] = simulate_one(params, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::min(params.threads, params.corpus_size);
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  report.stats = aggregate(params, report.runs);
  return report;
}

Json stats_json(const SimParams& params, const SimStats& s) {
  auto rate = [](const KindTally& t) {
    return t.violated == 0 ? Json(nullptr) : Json(static_cast<double>(t.fixed) / t.violated);
  };
  Json by_kind = Json::object();
  for (const auto& [kind, tally] : s.by_kind) {
    by_kind[std::string(kind_name(kind))] =
        Json{{"violated", tally.violated}, {"fixed", tally.fixed}, {"rate", rate(tally)}};
  }
  Json overrides = Json::object();
  for (const auto& [kind, p] : params.failures.overrides) {
    overrides[std::string(op_kind_name(kind))] = p;
  }
  return Json{
      {"params",
       {{"corpus_size", params.corpus_size},
        {"violations", {params.violations_min, params.violations_max}},
        {"p_fail", params.failures.p_fail},
        {"p_fail_overrides", overrides},
        {"k", params.refine.retry_budget_k},
        {"max_rounds", params.refine.max_rounds},
        {"epsilon", params.refine.verifier_epsilon},
        {"seed", params.seed}}},
      {"runs", s.runs},
      {"aborted_runs", s.aborted_runs},
      {"mean_initial_alignment", s.mean_initial_alignment},
      {"mean_final_alignment", s.mean_final_alignment},
      {"perfect_final_rate", s.perfect_final_rate},
      {"mean_editor_calls", s.mean_editor_calls},
      {"mean_rounds", s.mean_rounds},
      {"fix_rate",
       {{"overall", rate(s.overall)},
        {"violated", s.overall.violated},
        {"fixed", s.overall.fixed},
        {"by_kind", by_kind}}},
      {"skipped_items", s.skipped_items},
      {"termination_bound_violations", s.termination_bound_violations},
      {"monotonicity_violations", s.monotonicity_violations},
      {"trace_violations", s.trace_violations}};
}

}  // namespace refinery
