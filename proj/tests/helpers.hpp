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

#include <string>
#include <vector>

#include "refinery/core.hpp"
#include "refinery/simworld.hpp"

namespace refinery::testing {

inline Constraint presence(std::string noun, int id = 1) {
  Constraint c;
  c.id = id;
  c.kind = ConstraintKind::ObjectPresence;
  c.subject = std::move(noun);
  c.question = render_question(c);
  return c;
}

inline Constraint count(std::string noun, int n, int id = 1) {
  Constraint c;
  c.id = id;
  c.kind = ConstraintKind::ObjectCount;
  c.subject = std::move(noun);
  c.count = n;
  c.question = render_question(c);
  return c;
}

inline Constraint color(std::string noun, std::string col, int id = 1) {
  Constraint c;
  c.id = id;
  c.kind = ConstraintKind::ColorBinding;
  c.subject = std::move(noun);
  c.color = std::move(col);
  c.question = render_question(c);
  return c;
}

inline Constraint spatial(std::string subject, Relation rel, std::string object, int id = 1) {
  Constraint c;
  c.id = id;
  c.kind = ConstraintKind::SpatialRelation;
  c.subject = std::move(subject);
  c.relation = rel;
  c.object = std::move(object);
  c.question = render_question(c);
  return c;
}

inline Constraint text(std::string noun, std::string literal, int id = 1) {
  Constraint c;
  c.id = id;
  c.kind = ConstraintKind::TextContent;
  c.subject = std::move(noun);
  c.text = std::move(literal);
  c.question = render_question(c);
  return c;
}

inline Constraint style(std::string s, int id = 1) {
  Constraint c;
  c.id = id;
  c.kind = ConstraintKind::Style;
  c.style = std::move(s);
  c.question = render_question(c);
  return c;
}

inline Checklist checklist(std::string prompt, std::vector<Constraint> items) {
  for (std::size_t i = 0; i < items.size(); ++i) items[i].id = static_cast<int>(i) + 1;
  return Checklist{std::move(prompt), std::move(items)};
}

inline Scene scene_of(std::vector<SceneObject> objects, std::string style = "none") {
  Scene s;
  int oid = 1;
  for (auto& o : objects) {
    if (o.oid == 0) o.oid = oid;
    oid = o.oid + 1;
  }
  s.objects = std::move(objects);
  s.style = std::move(style);
  s.next_oid = oid;
  return s;
}

inline SceneObject obj(std::string category, int x, int y, std::string col = "uncolored") {
  SceneObject o;
  o.category = std::move(category);
  o.position = {x, y};
  o.color = std::move(col);
  return o;
}

inline int category_count(const Scene& s, const std::string& category) {
  int n = 0;
  for (const auto& o : s.objects) n += o.category == category;
  return n;
}

inline Scene pandas(int n) {
  std::vector<SceneObject> objects;
  for (int i = 0; i < n; ++i) objects.push_back(obj("panda", 5 + 2 * i, 10));
  return scene_of(std::move(objects));
}

}  // namespace refinery::testing
