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

#include "refinery/core.hpp"

#include <array>
#include <utility>

#include "refinery/lexicon.hpp"

namespace refinery {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::KindFieldMismatch: return "KindFieldMismatch";
    case Errc::ParseError: return "ParseError";
    case Errc::EmptyPrompt: return "EmptyPrompt";
    case Errc::BackendUnreachable: return "BackendUnreachable";
    case Errc::UnparseableResponse: return "UnparseableResponse";
    case Errc::NoJsonFound: return "NoJsonFound";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::EditRejected: return "EditRejected";
    case Errc::ScorerFailure: return "ScorerFailure";
    case Errc::UnsupportedKind: return "UnsupportedKind";
    case Errc::NoEvaluableConstraints: return "NoEvaluableConstraints";
    case Errc::SelectorNotFound: return "SelectorNotFound";
    case Errc::AlreadySatisfied: return "AlreadySatisfied";
    case Errc::CorruptionInfeasible: return "CorruptionInfeasible";
    case Errc::PlannerFailed: return "PlannerFailed";
    case Errc::ConfigNotFound: return "ConfigNotFound";
    case Errc::CorruptTrace: return "CorruptTrace";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

constexpr std::array<std::pair<ConstraintKind, std::string_view>, 7> kKinds = {{
    {ConstraintKind::ObjectPresence, "object_presence"},
    {ConstraintKind::ObjectCount, "object_count"},
    {ConstraintKind::ColorBinding, "color_binding"},
    {ConstraintKind::SpatialRelation, "spatial_relation"},
    {ConstraintKind::TextContent, "text_content"},
    {ConstraintKind::Style, "style"},
    {ConstraintKind::FreeForm, "free_form"},
}};

constexpr std::array<std::pair<Relation, std::string_view>, 4> kRelations = {{
    {Relation::LeftOf, "left-of"},
    {Relation::RightOf, "right-of"},
    {Relation::Above, "above"},
    {Relation::Below, "below"},
}};

constexpr std::array<std::pair<OpKind, std::string_view>, 6> kOpKinds = {{
    {OpKind::Add, "add"},
    {OpKind::Remove, "remove"},
    {OpKind::SetColor, "set_color"},
    {OpKind::Move, "move"},
    {OpKind::SetText, "set_text"},
    {OpKind::SetStyle, "set_style"},
}};

[[noreturn]] void mismatch(const Constraint& c, std::string_view field,
                           std::string_view what) {
  throw Error(Errc::KindFieldMismatch,
              std::string(kind_name(c.kind)) + " constraint #" +
                  std::to_string(c.id) + ": field '" + std::string(field) +
                  "' " + std::string(what));
}

[[noreturn]] void parse_error(const std::string& what) {
  throw Error(Errc::ParseError, what);
}

const Json& require(const Json& j, const char* key) {
  if (!j.is_object()) parse_error("expected a JSON object");
  auto it = j.find(key);
  if (it == j.end()) parse_error(std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_string()) parse_error(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

int require_int(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_number_integer()) {
    parse_error(std::string("field '") + key + "' must be an integer");
  }
  return v.get<int>();
}

std::optional<std::string> optional_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) parse_error(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

std::string_view kind_name(ConstraintKind kind) {
  for (const auto& [k, name] : kKinds) {
    if (k == kind) return name;
  }
  return "free_form";
}

ConstraintKind parse_kind(std::string_view name) {
  for (const auto& [k, n] : kKinds) {
    if (n == name) return k;
  }
  parse_error("unknown constraint kind '" + std::string(name) + "'");
}

std::string_view relation_name(Relation relation) {
  for (const auto& [r, name] : kRelations) {
    if (r == relation) return name;
  }
  return "left-of";
}

Relation parse_relation(std::string_view name) {
  for (const auto& [r, n] : kRelations) {
    if (n == name) return r;
  }
  parse_error("unknown relation '" + std::string(name) + "'");
}

std::string_view relation_phrase(Relation relation) {
  switch (relation) {
    case Relation::LeftOf: return "to the left of";
    case Relation::RightOf: return "to the right of";
    case Relation::Above: return "above";
    case Relation::Below: return "below";
  }
  return "";
}

std::string_view verdict_name(Verdict verdict) {
  switch (verdict) {
    case Verdict::Better: return "better";
    case Verdict::Worse: return "worse";
    case Verdict::Same: return "same";
  }
  return "same";
}

Verdict parse_verdict_name(std::string_view name) {
  if (name == "better") return Verdict::Better;
  if (name == "worse") return Verdict::Worse;
  if (name == "same") return Verdict::Same;
  parse_error("unknown verdict '" + std::string(name) + "'");
}

OpKind op_kind(const EditOp& op) { return static_cast<OpKind>(op.index()); }

std::string_view op_kind_name(OpKind kind) {
  for (const auto& [k, name] : kOpKinds) {
    if (k == kind) return name;
  }
  return "add";
}

OpKind parse_op_kind(std::string_view name) {
  for (const auto& [k, n] : kOpKinds) {
    if (n == name) return k;
  }
  parse_error("unknown edit op '" + std::string(name) + "'");
}

void validate_constraint(const Constraint& c) {
  if (c.id < 1) mismatch(c, "id", "must be >= 1");
  if (c.question.empty()) mismatch(c, "question", "must be non-empty");

  const bool wants_subject = c.kind != ConstraintKind::Style &&
                             c.kind != ConstraintKind::FreeForm;
  if (wants_subject && c.subject.empty()) mismatch(c, "subject", "is required");
  if (!wants_subject && !c.subject.empty()) mismatch(c, "subject", "must be absent");

  auto expect = [&](bool present, bool wanted, std::string_view field) {
    if (wanted && !present) mismatch(c, field, "is required");
    if (!wanted && present) mismatch(c, field, "must be absent");
  };
  const auto k = c.kind;
  expect(c.object.has_value(), k == ConstraintKind::SpatialRelation, "object");
  expect(c.relation.has_value(), k == ConstraintKind::SpatialRelation, "relation");
  expect(c.count.has_value(), k == ConstraintKind::ObjectCount, "count");
  expect(c.color.has_value(), k == ConstraintKind::ColorBinding, "color");
  expect(c.text.has_value(), k == ConstraintKind::TextContent, "text");
  expect(c.style.has_value(), k == ConstraintKind::Style, "style");

  if (c.count && *c.count < 1) mismatch(c, "count", "must be >= 1");
  if (c.color && !lexicon::is_color(*c.color)) {
    mismatch(c, "color", "is not a lexicon color");
  }
  if (c.object && c.object->empty()) mismatch(c, "object", "must be non-empty");
  if (c.text && c.text->empty()) mismatch(c, "text", "must be non-empty");
  if (c.style && c.style->empty()) mismatch(c, "style", "must be non-empty");
}

void validate_checklist(const Checklist& checklist) {
  for (std::size_t i = 0; i < checklist.items.size(); ++i) {
    const auto& c = checklist.items[i];
    validate_constraint(c);
    if (c.id != static_cast<int>(i) + 1) {
      mismatch(c, "id", "must be contiguous from 1 in checklist order");
    }
  }
}

void validate_edit_op(const EditOp& op) {
  auto bad = [&](const std::string& what) {
    throw Error(Errc::InvalidArgument,
                std::string(op_kind_name(op_kind(op))) + " op: " + what);
  };
  auto check_selector = [&](const Selector& s) {
    if (s.category.empty()) bad("selector category is empty");
  };
  auto check_color = [&](const std::string& color) {
    if (!lexicon::is_color(color)) bad("'" + color + "' is not a lexicon color");
  };
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, ops::Add>) {
          if (o.category.empty()) bad("category is empty");
          if (o.color) check_color(*o.color);
          if (o.position && !in_grid(*o.position)) bad("position outside grid");
        } else if constexpr (std::is_same_v<T, ops::Remove>) {
          check_selector(o.selector);
        } else if constexpr (std::is_same_v<T, ops::SetColor>) {
          check_selector(o.selector);
          check_color(o.color);
        } else if constexpr (std::is_same_v<T, ops::Move>) {
          check_selector(o.selector);
          if (!in_grid(o.position)) bad("position outside grid");
        } else if constexpr (std::is_same_v<T, ops::SetText>) {
          check_selector(o.selector);
          if (o.text.empty()) bad("text is empty");
        } else if constexpr (std::is_same_v<T, ops::SetStyle>) {
          if (o.style.empty()) bad("style is empty");
        }
      },
      op);
}

void validate_instruction(const EditInstruction& instruction) {
  if (instruction.surface.empty()) {
    throw Error(Errc::InvalidArgument, "edit instruction surface is empty");
  }
  for (const auto& op : instruction.ops) validate_edit_op(op);
}

void validate_config(const RefineConfig& config) {
  if (config.max_rounds < 1) {
    throw Error(Errc::InvalidArgument, "max_rounds must be positive");
  }
  if (config.retry_budget_k < 1) {
    throw Error(Errc::InvalidArgument, "retry_budget_k must be positive");
  }
  if (!(config.verifier_epsilon >= 0.0)) {
    throw Error(Errc::InvalidArgument, "verifier_epsilon must be non-negative");
  }
}

std::string render_question(const Constraint& c) {
  switch (c.kind) {
    case ConstraintKind::ObjectPresence: {
      const bool vowel = !c.subject.empty() &&
                         std::string_view("aeiou").find(c.subject.front()) != std::string_view::npos;
      return std::string(vowel ? "Is there an " : "Is there a ") + c.subject + "?";
    }
    case ConstraintKind::ObjectCount: {
      const int n = c.count.value_or(0);
      if (n == 1) return "Is there exactly 1 " + c.subject + "?";
      return "Are there exactly " + std::to_string(n) + " " +
             lexicon::pluralize(c.subject) + "?";
    }
    case ConstraintKind::ColorBinding:
      return "Is the " + c.subject + " " + c.color.value_or("") + "?";
    case ConstraintKind::SpatialRelation:
      return "Is the " + c.subject + " " +
             std::string(relation_phrase(c.relation.value_or(Relation::LeftOf))) +
             " the " + c.object.value_or("") + "?";
    case ConstraintKind::TextContent:
      return "Does the " + c.subject + " read \"" + c.text.value_or("") + "\"?";
    case ConstraintKind::Style:
      return "Is the image in " + c.style.value_or("") + " style?";
    case ConstraintKind::FreeForm:
      return c.question;
  }
  return c.question;
}

// --- JSON ----------------------------------------------------------------

void to_json(Json& j, const Constraint& c) {
  j = Json::object();
  j["id"] = c.id;
  j["kind"] = kind_name(c.kind);
  if (!c.subject.empty()) j["subject"] = c.subject;
  if (c.object) j["object"] = *c.object;
  if (c.color) j["color"] = *c.color;
  if (c.count) j["count"] = *c.count;
  if (c.relation) j["relation"] = relation_name(*c.relation);
  if (c.text) j["text"] = *c.text;
  if (c.style) j["style"] = *c.style;
  j["question"] = c.question;
}

void from_json(const Json& j, Constraint& c) {
  c = Constraint{};
  c.id = require_int(j, "id");
  c.kind = parse_kind(require_string(j, "kind"));
  c.subject = optional_string(j, "subject").value_or("");
  c.object = optional_string(j, "object");
  c.color = optional_string(j, "color");
  if (auto it = j.find("count"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) parse_error("field 'count' must be an integer");
    c.count = it->get<int>();
  }
  if (auto rel = optional_string(j, "relation")) c.relation = parse_relation(*rel);
  c.text = optional_string(j, "text");
  c.style = optional_string(j, "style");
  c.question = require_string(j, "question");
}

void to_json(Json& j, const Checklist& c) {
  j = Json{{"prompt", c.prompt}, {"items", c.items}};
}

void from_json(const Json& j, Checklist& c) {
  c.prompt = require_string(j, "prompt");
  const Json& items = require(j, "items");
  if (!items.is_array()) parse_error("field 'items' must be an array");
  c.items.clear();
  for (const auto& item : items) c.items.push_back(item.get<Constraint>());
}

void to_json(Json& j, const CheckResult& r) {
  j = Json{{"passed", r.passed}, {"reason", r.reason}};
}

void from_json(const Json& j, CheckResult& r) {
  const Json& passed = require(j, "passed");
  if (!passed.is_boolean()) parse_error("field 'passed' must be a boolean");
  r.passed = passed.get<bool>();
  r.reason = require_string(j, "reason");
}

void to_json(Json& j, Verdict v) { j = verdict_name(v); }

void from_json(const Json& j, Verdict& v) {
  if (!j.is_string()) parse_error("verdict must be a string");
  v = parse_verdict_name(j.get<std::string>());
}

void to_json(Json& j, const Position& p) { j = Json::array({p.x, p.y}); }

void from_json(const Json& j, Position& p) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
      !j[1].is_number_integer()) {
    parse_error("position must be [x, y]");
  }
  p = Position{j[0].get<int>(), j[1].get<int>()};
}

void to_json(Json& j, const Selector& s) {
  j = Json{{"category", s.category}};
  if (s.oid) j["oid"] = *s.oid;
}

void from_json(const Json& j, Selector& s) {
  s.category = require_string(j, "category");
  s.oid.reset();
  if (auto it = j.find("oid"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) parse_error("field 'oid' must be an integer");
    s.oid = it->get<int>();
  }
}

void to_json(Json& j, const EditOp& op) {
  j = Json{{"op", op_kind_name(op_kind(op))}};
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, ops::Add>) {
          j["category"] = o.category;
          if (o.color) j["color"] = *o.color;
          if (o.position) j["position"] = *o.position;
        } else if constexpr (std::is_same_v<T, ops::Remove>) {
          j["selector"] = o.selector;
        } else if constexpr (std::is_same_v<T, ops::SetColor>) {
          j["selector"] = o.selector;
          j["color"] = o.color;
        } else if constexpr (std::is_same_v<T, ops::Move>) {
          j["selector"] = o.selector;
          j["position"] = o.position;
        } else if constexpr (std::is_same_v<T, ops::SetText>) {
          j["selector"] = o.selector;
          j["text"] = o.text;
        } else if constexpr (std::is_same_v<T, ops::SetStyle>) {
          j["style"] = o.style;
        }
      },
      op);
}

void from_json(const Json& j, EditOp& op) {
  const std::string name = require_string(j, "op");
  if (name == "add") {
    ops::Add add{require_string(j, "category"), optional_string(j, "color"), {}};
    if (auto it = j.find("position"); it != j.end() && !it->is_null()) {
      add.position = it->get<Position>();
    }
    op = add;
  } else if (name == "remove") {
    op = ops::Remove{require(j, "selector").get<Selector>()};
  } else if (name == "set_color") {
    op = ops::SetColor{require(j, "selector").get<Selector>(),
                       require_string(j, "color")};
  } else if (name == "move") {
    op = ops::Move{require(j, "selector").get<Selector>(),
                   require(j, "position").get<Position>()};
  } else if (name == "set_text") {
    op = ops::SetText{require(j, "selector").get<Selector>(),
                      require_string(j, "text")};
  } else if (name == "set_style") {
    op = ops::SetStyle{require_string(j, "style")};
  } else {
    parse_error("unknown edit op '" + name + "'");
  }
}

void to_json(Json& j, const EditInstruction& e) {
  Json ops = Json::array();
  for (const auto& op : e.ops) {
    Json o;
    to_json(o, op);
    ops.push_back(std::move(o));
  }
  j = Json{{"surface", e.surface}, {"ops", std::move(ops)}};
}

void from_json(const Json& j, EditInstruction& e) {
  e.surface = require_string(j, "surface");
  e.ops.clear();
  if (auto it = j.find("ops"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) parse_error("field 'ops' must be an array");
    for (const auto& o : *it) {
      EditOp op;
      from_json(o, op);
      e.ops.push_back(std::move(op));
    }
  }
}

void to_json(Json& j, const ImageRef& r) {
  j = Json{{"mode", r.mode == ImageMode::File ? "file" : "scene"},
           {"locator", r.locator},
           {"digest", r.digest}};
}

void from_json(const Json& j, ImageRef& r) {
  const std::string mode = require_string(j, "mode");
  if (mode == "file") {
    r.mode = ImageMode::File;
  } else if (mode == "scene") {
    r.mode = ImageMode::Scene;
  } else {
    parse_error("unknown image mode '" + mode + "'");
  }
  r.locator = require_string(j, "locator");
  r.digest = require_string(j, "digest");
}

void to_json(Json& j, const RefineConfig& c) {
  j = Json{{"max_rounds", c.max_rounds},
           {"retry_budget_k", c.retry_budget_k},
           {"verifier_epsilon", c.verifier_epsilon}};
}

void from_json(const Json& j, RefineConfig& c) {
  c = RefineConfig{};
  if (!j.is_object()) parse_error("refine config must be an object");
  if (j.contains("max_rounds")) c.max_rounds = require_int(j, "max_rounds");
  if (j.contains("retry_budget_k")) c.retry_budget_k = require_int(j, "retry_budget_k");
  if (j.contains("verifier_epsilon")) {
    const Json& eps = j.at("verifier_epsilon");
    if (!eps.is_number()) parse_error("field 'verifier_epsilon' must be a number");
    c.verifier_epsilon = eps.get<double>();
  }
}

}  // namespace refinery
