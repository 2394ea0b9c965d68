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
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "refinery/error.hpp"

namespace refinery {

using Json = nlohmann::json;

enum class ConstraintKind {
  ObjectPresence,
  ObjectCount,
  ColorBinding,
  SpatialRelation,
  TextContent,
  Style,
  FreeForm,
};

std::string_view kind_name(ConstraintKind kind);
ConstraintKind parse_kind(std::string_view name);

enum class Relation { LeftOf, RightOf, Above, Below };

std::string_view relation_name(Relation relation);
Relation parse_relation(std::string_view name);
// "to the left of", "above", ... as used in rendered questions.
std::string_view relation_phrase(Relation relation);

/// One yes/no-verifiable requirement decomposed from a prompt.
///
/// Which optional fields are populated depends on `kind`; see
/// validate_constraint() for the exact rules.
struct Constraint {
  int id = 0;
  ConstraintKind kind = ConstraintKind::FreeForm;
  std::string subject;
  std::optional<std::string> object;
  std::optional<std::string> color;
  std::optional<int> count;
  std::optional<Relation> relation;
  std::optional<std::string> text;
  std::optional<std::string> style;
  std::string question;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

struct Checklist {
  std::string prompt;
  std::vector<Constraint> items;

  friend bool operator==(const Checklist&, const Checklist&) = default;
};

/// Fused checker/refiner verdict: when `passed` is false, `reason` is the
/// edit instruction handed to the editor.
struct CheckResult {
  bool passed = false;
  std::string reason;

  friend bool operator==(const CheckResult&, const CheckResult&) = default;
};

enum class Verdict { Better, Worse, Same };

std::string_view verdict_name(Verdict verdict);
Verdict parse_verdict_name(std::string_view name);

inline constexpr int kGridSize = 32;

struct Position {
  int x = 0;
  int y = 0;

  friend bool operator==(const Position&, const Position&) = default;
};

inline bool in_grid(Position p) {
  return p.x >= 0 && p.x < kGridSize && p.y >= 0 && p.y < kGridSize;
}

// Resolves to the lowest-oid object of `category`, restricted to `oid` when
// one is given.
struct Selector {
  std::string category;
  std::optional<int> oid;

  friend bool operator==(const Selector&, const Selector&) = default;
};

namespace ops {

struct Add {
  std::string category;
  std::optional<std::string> color;
  std::optional<Position> position;
  friend bool operator==(const Add&, const Add&) = default;
};
struct Remove {
  Selector selector;
  friend bool operator==(const Remove&, const Remove&) = default;
};
struct SetColor {
  Selector selector;
  std::string color;
  friend bool operator==(const SetColor&, const SetColor&) = default;
};
struct Move {
  Selector selector;
  Position position;
  friend bool operator==(const Move&, const Move&) = default;
};
struct SetText {
  Selector selector;
  std::string text;
  friend bool operator==(const SetText&, const SetText&) = default;
};
struct SetStyle {
  std::string style;
  friend bool operator==(const SetStyle&, const SetStyle&) = default;
};

}  // namespace ops

using EditOp = std::variant<ops::Add, ops::Remove, ops::SetColor, ops::Move,
                            ops::SetText, ops::SetStyle>;

enum class OpKind { Add, Remove, SetColor, Move, SetText, SetStyle };

OpKind op_kind(const EditOp& op);
std::string_view op_kind_name(OpKind kind);
OpKind parse_op_kind(std::string_view name);

struct EditInstruction {
  std::string surface;
  std::vector<EditOp> ops;

  friend bool operator==(const EditInstruction&, const EditInstruction&) =
      default;
};

enum class ImageMode { File, Scene };

struct ImageRef {
  ImageMode mode = ImageMode::File;
  std::string locator;
  std::string digest;

  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

struct RefineConfig {
  int max_rounds = 5;
  int retry_budget_k = 2;
  double verifier_epsilon = 0.0;

  friend bool operator==(const RefineConfig&, const RefineConfig&) = default;
};

// Throws Error(KindFieldMismatch) naming the offending field.
void validate_constraint(const Constraint& c);
// Item validity plus ids unique and contiguous from 1.
void validate_checklist(const Checklist& checklist);
void validate_edit_op(const EditOp& op);
void validate_instruction(const EditInstruction& instruction);
void validate_config(const RefineConfig& config);

// Deterministic yes/no rendering for a structured constraint.
std::string render_question(const Constraint& c);

void to_json(Json& j, const Constraint& c);
void from_json(const Json& j, Constraint& c);
void to_json(Json& j, const Checklist& c);
void from_json(const Json& j, Checklist& c);
void to_json(Json& j, const CheckResult& r);
void from_json(const Json& j, CheckResult& r);
void to_json(Json& j, Verdict v);
void from_json(const Json& j, Verdict& v);
void to_json(Json& j, const Position& p);
void from_json(const Json& j, Position& p);
void to_json(Json& j, const Selector& s);
void from_json(const Json& j, Selector& s);
void to_json(Json& j, const EditOp& op);
void from_json(const Json& j, EditOp& op);
void to_json(Json& j, const EditInstruction& e);
void from_json(const Json& j, EditInstruction& e);
void to_json(Json& j, const ImageRef& r);
void from_json(const Json& j, ImageRef& r);
void to_json(Json& j, const RefineConfig& c);
void from_json(const Json& j, RefineConfig& c);

// Canonical text form: compact JSON with sorted keys.
template <typename T>
std::string canonical_json(const T& value) {
  return Json(value).dump();
}

}  // namespace refinery
