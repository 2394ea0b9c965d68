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

#include "refinery/simworld.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "refinery/digest.hpp"
#include "refinery/lexicon.hpp"
#include "refinery/planner.hpp"
#include "refinery/rng.hpp"

namespace refinery {
namespace {

constexpr int kInteriorMin = 4;
constexpr int kInteriorMax = 27;
constexpr int kSpatialOffset = 3;
constexpr int kMaxCorruptionDraws = 100;
constexpr int kMaxPlacementDraws = 1000;

const SceneObject* lowest(const Scene& scene, std::string_view category) {
  for (const auto& o : scene.objects) {
    if (o.category == category) return &o;
  }
  return nullptr;
}

int count_of(const Scene& scene, std::string_view category) {
  return static_cast<int>(std::count_if(
      scene.objects.begin(), scene.objects.end(),
      [&](const SceneObject& o) { return o.category == category; }));
}

SceneObject& resolve(Scene& scene, const Selector& selector, std::string_view op) {
  for (auto& o : scene.objects) {
    if (o.category == selector.category && (!selector.oid || o.oid == *selector.oid)) {
      return o;
    }
  }
  throw Error(Errc::SelectorNotFound,
              std::string(op) + ": no object matches '" + selector.category + "'" +
                  (selector.oid ? " #" + std::to_string(*selector.oid) : ""));
}

bool occupied(const Scene& scene, Position p) {
  return std::any_of(scene.objects.begin(), scene.objects.end(),
                     [&](const SceneObject& o) { return o.position == p; });
}

Position first_free_cell(const Scene& scene) {
  for (int y = 0; y < kGridSize; ++y) {
    for (int x = 0; x < kGridSize; ++x) {
      if (!occupied(scene, {x, y})) return {x, y};
    }
  }
  return {0, 0};
}

Position random_free_cell(const Scene& scene, Rng& rng) {
  std::vector<Position> free;
  for (int y = 0; y < kGridSize; ++y) {
    for (int x = 0; x < kGridSize; ++x) {
      if (!occupied(scene, {x, y})) free.push_back({x, y});
    }
  }
  if (free.empty()) return {0, 0};
  return free[rng.index(free.size())];
}

std::string wrong_color(std::string_view avoid, Rng& rng) {
  std::vector<std::string_view> options;
  for (auto c : lexicon::kColors) {
    if (c != avoid) options.push_back(c);
  }
  return std::string(options[rng.index(options.size())]);
}

bool relation_holds(Relation rel, Position subject, Position object) {
  switch (rel) {
    case Relation::LeftOf: return subject.x < object.x;
    case Relation::RightOf: return subject.x > object.x;
    case Relation::Above: return subject.y > object.y;
    case Relation::Below: return subject.y < object.y;
  }
  return false;
}

void add_object(Scene& scene, std::string category, std::string color, Position p) {
  SceneObject o;
  o.oid = scene.next_oid++;
  o.category = std::move(category);
  o.color = std::move(color);
  o.position = p;
  scene.objects.push_back(std::move(o));
}

void normalize(Scene& scene) {
  std::sort(scene.objects.begin(), scene.objects.end(),
            [](const SceneObject& a, const SceneObject& b) { return a.oid < b.oid; });
  scene.next_oid = scene.objects.empty() ? 1 : scene.objects.back().oid + 1;
}

std::string noun_for(int n, const std::string& subject) {
  return n == 1 ? subject : lexicon::pluralize(subject);
}

bool is_evaluable(const Constraint& c) { return c.kind != ConstraintKind::FreeForm; }

}  // namespace

void validate_scene(const Scene& scene) {
  std::set<int> oids;
  for (const auto& o : scene.objects) {
    if (!oids.insert(o.oid).second) {
      throw Error(Errc::InvalidArgument, "duplicate oid " + std::to_string(o.oid));
    }
    if (!in_grid(o.position)) {
      throw Error(Errc::InvalidArgument, "object " + std::to_string(o.oid) + " outside grid");
    }
    if (o.oid >= scene.next_oid) {
      throw Error(Errc::InvalidArgument, "next_oid must exceed every oid");
    }
    if (o.category.empty()) throw Error(Errc::InvalidArgument, "object with empty category");
  }
}

void to_json(Json& j, const SceneObject& o) {
  j = Json{{"oid", o.oid},
           {"category", o.category},
           {"color", o.color},
           {"position", o.position},
           {"text", o.text ? Json(*o.text) : Json(nullptr)}};
}

void from_json(const Json& j, SceneObject& o) {
  if (!j.is_object() || !j.contains("oid") || !j["oid"].is_number_integer() ||
      !j.contains("category") || !j["category"].is_string() ||
      !j.contains("position")) {
    throw Error(Errc::ParseError, "scene object needs oid, category and position");
  }
  o.oid = j["oid"].get<int>();
  o.category = j["category"].get<std::string>();
  o.color = "uncolored";
  if (auto it = j.find("color"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(Errc::ParseError, "object color must be a string");
    o.color = it->get<std::string>();
  }
  o.position = j["position"].get<Position>();
  o.text.reset();
  if (auto it = j.find("text"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(Errc::ParseError, "object text must be a string");
    o.text = it->get<std::string>();
  }
}

void to_json(Json& j, const Scene& s) {
  Scene sorted = s;
  normalize(sorted);
  j = Json{{"objects", sorted.objects}, {"style", sorted.style}};
}

void from_json(const Json& j, Scene& s) {
  if (!j.is_object() || !j.contains("objects") || !j["objects"].is_array()) {
    throw Error(Errc::ParseError, "scene needs an objects array");
  }
  s = Scene{};
  for (const auto& o : j["objects"]) s.objects.push_back(o.get<SceneObject>());
  if (auto it = j.find("style"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(Errc::ParseError, "scene style must be a string");
    s.style = it->get<std::string>();
  }
  normalize(s);
  validate_scene(s);
}

std::string scene_digest(const Scene& scene) {
  return sha256_hex(canonical_json(scene));
}

bool eval_constraint(const Scene& scene, const Constraint& c) {
  validate_constraint(c);
  switch (c.kind) {
    case ConstraintKind::ObjectPresence:
      return lowest(scene, c.subject) != nullptr;
    case ConstraintKind::ObjectCount:
      return count_of(scene, c.subject) == *c.count;
    case ConstraintKind::ColorBinding:
      return std::any_of(scene.objects.begin(), scene.objects.end(),
                         [&](const SceneObject& o) {
                           return o.category == c.subject && o.color == *c.color;
                         });
    case ConstraintKind::SpatialRelation: {
      const auto* s = lowest(scene, c.subject);
      const auto* o = lowest(scene, *c.object);
      return s && o && relation_holds(*c.relation, s->position, o->position);
    }
    case ConstraintKind::TextContent:
      return std::any_of(scene.objects.begin(), scene.objects.end(),
                         [&](const SceneObject& o) { return o.text == c.text; });
    case ConstraintKind::Style:
      return scene.style == *c.style;
    case ConstraintKind::FreeForm:
      break;
  }
  throw Error(Errc::UnsupportedKind, "free-form constraints have no scene semantics");
}

double alignment_score(const Scene& scene, const Checklist& checklist) {
  int evaluable = 0;
  int satisfied = 0;
  for (const auto& c : checklist.items) {
    if (!is_evaluable(c)) continue;
    ++evaluable;
    satisfied += eval_constraint(scene, c) ? 1 : 0;
  }
  if (evaluable == 0) {
    throw Error(Errc::NoEvaluableConstraints, "checklist has no evaluable constraints");
  }
  return static_cast<double>(satisfied) / evaluable;
}

Scene apply_edit(const Scene& scene, std::span<const EditOp> ops,
                 std::uint64_t rng_seed, const FailureModel& failures) {
  if (ops.empty()) throw Error(Errc::InvalidArgument, "apply_edit needs at least one op");
  for (const auto& op : ops) validate_edit_op(op);

  Scene out = scene;
  normalize(out);
  Rng rng(rng_seed);
  for (const auto& op : ops) {
    const bool failed = rng.bernoulli(failures.probability(op_kind(op)));
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, ops::Add>) {
            if (failed) return;
            add_object(out, o.category, o.color.value_or(std::string(lexicon::kUncolored)),
                       o.position.value_or(first_free_cell(out)));
          } else if constexpr (std::is_same_v<T, ops::Remove>) {
            const int oid = resolve(out, o.selector, "remove").oid;
            if (failed) return;
            std::erase_if(out.objects, [&](const SceneObject& x) { return x.oid == oid; });
          } else if constexpr (std::is_same_v<T, ops::SetColor>) {
            auto& target = resolve(out, o.selector, "set_color");
            target.color = failed ? wrong_color(o.color, rng) : o.color;
          } else if constexpr (std::is_same_v<T, ops::Move>) {
            auto& target = resolve(out, o.selector, "move");
            if (!failed) target.position = o.position;
          } else if constexpr (std::is_same_v<T, ops::SetText>) {
            auto& target = resolve(out, o.selector, "set_text");
            if (!failed) target.text = o.text;
          } else if constexpr (std::is_same_v<T, ops::SetStyle>) {
            if (!failed) out.style = o.style;
          }
        },
        op);
  }
  return out;
}

Scene apply_edit(const Scene& scene, std::span<const EditOp> ops,
                 std::uint64_t rng_seed, double p_fail) {
  return apply_edit(scene, ops, rng_seed, FailureModel{p_fail, {}});
}

EditInstruction sim_refine_instruction(const Constraint& c, const Scene& scene) {
  if (eval_constraint(scene, c)) {
    throw Error(Errc::AlreadySatisfied, "constraint #" + std::to_string(c.id) + " already holds");
  }
  EditInstruction out;
  switch (c.kind) {
    case ConstraintKind::ObjectPresence:
      out.ops.push_back(ops::Add{c.subject, {}, {}});
      out.surface = "Add a " + c.subject;
      break;

    case ConstraintKind::ObjectCount: {
      const int want = *c.count;
      const int have = count_of(scene, c.subject);
      const int d = std::abs(want - have);
      if (have < want) {
        for (int i = 0; i < d; ++i) out.ops.push_back(ops::Add{c.subject, {}, {}});
        out.surface = "Add " + std::to_string(d) + " " + noun_for(d, c.subject) +
                      " so there are exactly " + std::to_string(want);
      } else {
        std::vector<int> oids;
        for (const auto& o : scene.objects) {
          if (o.category == c.subject) oids.push_back(o.oid);
        }
        for (int i = 0; i < d; ++i) {
          out.ops.push_back(ops::Remove{Selector{c.subject, oids[oids.size() - 1 - i]}});
        }
        out.surface = "Remove " + std::to_string(d) + " " + noun_for(d, c.subject) +
                      " so there are exactly " + std::to_string(want);
      }
      break;
    }

    case ConstraintKind::ColorBinding:
      if (lowest(scene, c.subject)) {
        out.ops.push_back(ops::SetColor{Selector{c.subject, {}}, *c.color});
        out.surface = "Change the color of the " + c.subject + " to " + *c.color;
      } else {
        out.ops.push_back(ops::Add{c.subject, *c.color, {}});
        out.surface = "Add a " + *c.color + " " + c.subject;
      }
      break;

    case ConstraintKind::SpatialRelation: {
      const Relation rel = *c.relation;
      const bool horizontal = rel == Relation::LeftOf || rel == Relation::RightOf;
      const std::string phrase(relation_phrase(rel));
      std::vector<std::string> steps;

      Position anchor{kGridSize / 2, kGridSize / 2};
      if (const auto* obj = lowest(scene, *c.object)) {
        anchor = obj->position;
        Position clamped = anchor;
        int& axis = horizontal ? clamped.x : clamped.y;
        axis = std::clamp(axis, kSpatialOffset, kGridSize - 1 - kSpatialOffset);
        if (clamped != anchor) {
          out.ops.push_back(ops::Move{Selector{*c.object, obj->oid}, clamped});
          steps.push_back("move the " + *c.object + " away from the edge");
          anchor = clamped;
        }
      } else {
        out.ops.push_back(ops::Add{*c.object, {}, anchor});
        steps.push_back("add a " + *c.object);
      }

      const auto* subj = lowest(scene, c.subject);
      Position target = subj ? subj->position : anchor;
      switch (rel) {
        case Relation::LeftOf: target.x = anchor.x - kSpatialOffset; break;
        case Relation::RightOf: target.x = anchor.x + kSpatialOffset; break;
        case Relation::Above: target.y = anchor.y + kSpatialOffset; break;
        case Relation::Below: target.y = anchor.y - kSpatialOffset; break;
      }
      if (subj) {
        out.ops.push_back(ops::Move{Selector{c.subject, subj->oid}, target});
        steps.push_back("move the " + c.subject + " " + phrase + " the " + *c.object);
      } else {
        out.ops.push_back(ops::Add{c.subject, {}, target});
        steps.push_back("add a " + c.subject + " " + phrase + " the " + *c.object);
      }
      for (std::size_t i = 0; i < steps.size(); ++i) {
        out.surface += (i == 0 ? "" : ", then ") + steps[i];
      }
      out.surface[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out.surface[0])));
      break;
    }

    case ConstraintKind::TextContent:
      if (lowest(scene, c.subject)) {
        out.ops.push_back(ops::SetText{Selector{c.subject, {}}, *c.text});
        out.surface = "Change the text on the " + c.subject + " to \"" + *c.text + "\"";
      } else {
        out.ops.push_back(ops::Add{c.subject, {}, {}});
        out.ops.push_back(ops::SetText{Selector{c.subject, {}}, *c.text});
        out.surface = "Add a " + c.subject + " with the text \"" + *c.text + "\"";
      }
      break;

    case ConstraintKind::Style:
      out.ops.push_back(ops::SetStyle{*c.style});
      out.surface = "Render the image in " + *c.style + " style";
      break;

    case ConstraintKind::FreeForm:
      throw Error(Errc::UnsupportedKind, "free-form constraints have no scene semantics");
  }
  return out;
}

namespace {

// Makes `c` false in place where the scene allows; never touches unrelated
// categories.
void invert(Scene& scene, const Constraint& c, Rng& rng) {
  switch (c.kind) {
    case ConstraintKind::ObjectPresence:
      std::erase_if(scene.objects, [&](const SceneObject& o) { return o.category == c.subject; });
      break;
    case ConstraintKind::ObjectCount:
      if (rng.bernoulli(0.5)) {
        add_object(scene, c.subject, std::string(lexicon::kUncolored),
                   random_free_cell(scene, rng));
      } else {
        for (auto it = scene.objects.rbegin(); it != scene.objects.rend(); ++it) {
          if (it->category == c.subject) {
            scene.objects.erase(std::next(it).base());
            break;
          }
        }
      }
      break;
    case ConstraintKind::ColorBinding:
      for (auto& o : scene.objects) {
        if (o.category == c.subject && o.color == *c.color) o.color = wrong_color(*c.color, rng);
      }
      break;
    case ConstraintKind::SpatialRelation: {
      auto find_mut = [&](std::string_view category) -> SceneObject* {
        for (auto& o : scene.objects) {
          if (o.category == category) return &o;
        }
        return nullptr;
      };
      auto* s = find_mut(c.subject);
      auto* o = find_mut(*c.object);
      if (s && o && s != o) std::swap(s->position, o->position);
      break;
    }
    case ConstraintKind::TextContent:
      for (auto& o : scene.objects) {
        if (o.text != c.text) continue;
        std::string garbled(c.text->rbegin(), c.text->rend());
        if (garbled == *c.text) garbled += '~';
        o.text = garbled;
      }
      break;
    case ConstraintKind::Style:
      scene.style = *c.style == "none" ? "plain" : "none";
      break;
    case ConstraintKind::FreeForm:
      break;
  }
}

}  // namespace

Scene corrupt(const Scene& scene, const Checklist& checklist, int n_violations,
              std::uint64_t rng_seed) {
  std::vector<const Constraint*> evaluable;
  for (const auto& c : checklist.items) {
    if (is_evaluable(c)) evaluable.push_back(&c);
  }
  if (n_violations < 1 || n_violations > static_cast<int>(evaluable.size())) {
    throw Error(Errc::InvalidArgument, "n_violations must lie in [1, evaluable count]");
  }
  for (const auto* c : evaluable) {
    if (!eval_constraint(scene, *c)) {
      throw Error(Errc::InvalidArgument, "corrupt expects a scene satisfying the checklist");
    }
  }

  for (int draw = 0; draw < kMaxCorruptionDraws; ++draw) {
    Rng rng(derive_seed({rng_seed, static_cast<std::uint64_t>(draw)}));
    std::vector<std::size_t> order(evaluable.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n_violations); ++i) {
      std::swap(order[i], order[i + rng.index(order.size() - i)]);
    }
    Scene out = scene;
    normalize(out);
    for (int i = 0; i < n_violations; ++i) invert(out, *evaluable[order[i]], rng);
    normalize(out);

    int violated = 0;
    for (const auto* c : evaluable) violated += eval_constraint(out, *c) ? 0 : 1;
    if (violated == n_violations) return out;
  }
  throw Error(Errc::CorruptionInfeasible,
              "no draw violated exactly " + std::to_string(n_violations) + " constraints");
}

Scene build_satisfying_scene(const Checklist& checklist, std::uint64_t rng_seed) {
  std::vector<std::string> categories;
  auto mention = [&](const std::string& category) {
    if (!category.empty() &&
        std::find(categories.begin(), categories.end(), category) == categories.end()) {
      categories.push_back(category);
    }
  };
  for (const auto& c : checklist.items) {
    if (!is_evaluable(c)) continue;
    mention(c.subject);
    if (c.object) mention(*c.object);
  }

  Scene scene;
  for (const auto& category : categories) {
    int n = 1;
    std::vector<std::string> colors;
    std::vector<std::string> texts;
    for (const auto& c : checklist.items) {
      if (c.subject != category) continue;
      if (c.kind == ConstraintKind::ObjectCount) n = *c.count;
      if (c.kind == ConstraintKind::ColorBinding) colors.push_back(*c.color);
      if (c.kind == ConstraintKind::TextContent) texts.push_back(*c.text);
    }
    n = std::max({n, static_cast<int>(colors.size()), static_cast<int>(texts.size())});
    for (int k = 0; k < n; ++k) {
      std::string color = colors.empty() ? std::string(lexicon::kUncolored)
                                         : colors[std::min<std::size_t>(k, colors.size() - 1)];
      add_object(scene, category, std::move(color), {0, 0});
      if (k < static_cast<int>(texts.size())) scene.objects.back().text = texts[k];
    }
  }
  for (const auto& c : checklist.items) {
    if (c.kind == ConstraintKind::Style) {
      scene.style = *c.style;
      break;
    }
  }

  Rng rng(rng_seed);
  constexpr int kSpan = kInteriorMax - kInteriorMin + 1;
  for (int draw = 0; draw < kMaxPlacementDraws; ++draw) {
    std::set<std::pair<int, int>> used;
    for (auto& o : scene.objects) {
      Position p;
      do {
        p = {kInteriorMin + static_cast<int>(rng.index(kSpan)),
             kInteriorMin + static_cast<int>(rng.index(kSpan))};
      } while (!used.insert({p.x, p.y}).second);
      o.position = p;
    }
    bool ok = true;
    for (const auto& c : checklist.items) {
      if (is_evaluable(c) && !eval_constraint(scene, c)) {
        ok = false;
        break;
      }
    }
    if (ok) return scene;
  }
  throw Error(Errc::CorruptionInfeasible, "checklist items conflict; no satisfying scene");
}

ImageRef SceneStore::put(Scene scene) {
  normalize(scene);
  validate_scene(scene);
  const std::string digest = scene_digest(scene);
  ImageRef ref{ImageMode::Scene, "scene:" + digest, digest};
  std::lock_guard lock(mutex_);
  scenes_.try_emplace(ref.locator, std::move(scene));
  return ref;
}

Scene SceneStore::get(const ImageRef& ref) const {
  if (ref.mode != ImageMode::Scene) {
    throw Error(Errc::InvalidArgument, "'" + ref.locator + "' is not a scene reference");
  }
  std::lock_guard lock(mutex_);
  auto it = scenes_.find(ref.locator);
  if (it == scenes_.end()) {
    throw Error(Errc::InvalidArgument, "unknown scene '" + ref.locator + "'");
  }
  return it->second;
}

ImageRef SceneStore::load_file(const std::string& path) {
  return put(load_scene_file(path));
}

void SceneStore::save_file(const ImageRef& ref, const std::string& path) const {
  save_scene_file(get(ref), path);
}

Scene load_scene_file(const std::string& path) {
  const Json j = Json::parse(read_file_bytes(path), nullptr, false);
  if (j.is_discarded()) throw Error(Errc::ParseError, "'" + path + "' is not JSON");
  return j.get<Scene>();
}

void save_scene_file(const Scene& scene, const std::string& path) {
  write_file_bytes(path, Json(scene).dump(2) + "\n");
}

CheckResult SimChecker::check(const ImageRef& image, const Constraint& c) {
  const Scene scene = store_->get(image);
  if (eval_constraint(scene, c)) return CheckResult{true, ""};
  return CheckResult{false, sim_refine_instruction(c, scene).surface};
}

EditInstruction SimChecker::refine(const ImageRef& image, const Constraint& c,
                                   const CheckResult& /*result*/) {
  return sim_refine_instruction(c, store_->get(image));
}

ImageRef SimEditor::edit(const ImageRef& image, const EditInstruction& instruction) {
  validate_instruction(instruction);
  if (instruction.ops.empty()) {
    throw Error(Errc::EditRejected, "simulated editor needs structured ops");
  }
  const std::uint64_t call = calls_.fetch_add(1);
  try {
    Scene edited = apply_edit(store_->get(image), instruction.ops,
                              derive_seed({seed_, call}), failures_);
    return store_->put(std::move(edited));
  } catch (const Error& e) {
    if (e.code() == Errc::SelectorNotFound) throw Error(Errc::EditRejected, e.what());
    throw;
  }
}

double AlignmentScorer::score(const std::string& prompt, const ImageRef& image) {
  try {
    return alignment_score(store_->get(image), plan_rule(prompt));
  } catch (const Error& e) {
    throw Error(Errc::ScorerFailure, e.what());
  }
}

}  // namespace refinery
