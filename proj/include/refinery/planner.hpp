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

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "refinery/chat.hpp"
#include "refinery/core.hpp"

namespace refinery {

// Instruction text sent ahead of the user prompt to a remote planner.
extern const std::string_view kPlannerPrompt;

/// Deterministic rule-grammar planner.
///
/// Lowercases the prompt, drops a leading "a photo of" / "an image of" and
/// all articles, splits noun phrases on "and" and commas, then applies:
///   every head noun        -> ObjectPresence
///   color before a noun    -> ColorBinding
///   numeral before a noun  -> ObjectCount
///   NP1 <relation> NP2     -> SpatialRelation
///   text marker + quote    -> TextContent
///   style clause           -> Style
/// Items are ordered by kind (presence, color, count, spatial, text, style,
/// free-form) and by surface order within a kind. Segments that match no
/// rule become FreeForm items; a prompt where nothing matches yields a
/// single FreeForm item carrying the whole prompt.
///
/// Throws Error(EmptyPrompt) for blank input.
Checklist plan_rule(std::string_view prompt);

// Splits a "1. ... 2. ..." response into item texts. Items may share a line.
std::vector<std::string> split_numbered_list(std::string_view content);

// Keyword classification of one remote checklist line. Falls back to
// FreeForm when the kind's fields cannot be recovered.
Constraint classify_line(int id, std::string_view line);

// Throws UnparseableResponse when no numbered item is found.
Checklist parse_plan_response(std::string_view prompt, std::string_view content);

Checklist plan_remote(std::string_view prompt, ChatTransport& backend,
                      const std::string& model_name);

class Planner {
 public:
  virtual ~Planner() = default;
  virtual Checklist plan(const std::string& prompt) = 0;
};

class RulePlanner final : public Planner {
 public:
  Checklist plan(const std::string& prompt) override { return plan_rule(prompt); }
};

class RemotePlanner final : public Planner {
 public:
  RemotePlanner(std::shared_ptr<ChatTransport> backend, std::string model_name)
      : backend_(std::move(backend)), model_name_(std::move(model_name)) {}

  Checklist plan(const std::string& prompt) override {
    return plan_remote(prompt, *backend_, model_name_);
  }

 private:
  std::shared_ptr<ChatTransport> backend_;
  std::string model_name_;
};

}  // namespace refinery
