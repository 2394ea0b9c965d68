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

#include "helpers.hpp"
#include "refinery/digest.hpp"
#include "refinery/lexicon.hpp"

using namespace refinery;
using namespace refinery::testing;

namespace {

template <class T>
T round_trip(const T& value) {
  return Json::parse(canonical_json(value)).template get<T>();
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("validate_constraint accepts a well-formed count") {
  CHECK_NOTHROW(validate_constraint(count("panda", 5)));
}

TEST_CASE("spatial relation without an object is a kind/field mismatch") {
  Constraint c = spatial("tie", Relation::RightOf, "potted plant");
  c.object.reset();
  CHECK(code_of([&] { validate_constraint(c); }) == Errc::KindFieldMismatch);
}

TEST_CASE("zero count is a kind/field mismatch") {
  Constraint c = count("book", 1);
  c.count = 0;
  CHECK(code_of([&] { validate_constraint(c); }) == Errc::KindFieldMismatch);
}

TEST_CASE("fields foreign to the kind are rejected") {
  Constraint c = presence("cat");
  c.color = "red";
  CHECK(code_of([&] { validate_constraint(c); }) == Errc::KindFieldMismatch);

  Constraint off_lexicon = color("cat", "red");
  off_lexicon.color = "mauve";
  CHECK(code_of([&] { validate_constraint(off_lexicon); }) == Errc::KindFieldMismatch);
}

TEST_CASE("checklist ids must run 1..n") {
  Checklist cl = checklist("p", {presence("cat"), presence("dog")});
  CHECK_NOTHROW(validate_checklist(cl));
  cl.items[1].id = 3;
  CHECK_THROWS_AS(validate_checklist(cl), Error);
}

TEST_CASE("questions") {
  CHECK(render_question(presence("panda")) == "Is there a panda?");
  CHECK(render_question(presence("apple")) == "Is there an apple?");
  CHECK(render_question(count("panda", 5)) == "Are there exactly 5 pandas?");
  CHECK(render_question(count("panda", 1)) == "Is there exactly 1 panda?");
  CHECK(render_question(color("chair", "yellow")) == "Is the chair yellow?");
  CHECK(render_question(spatial("tie", Relation::RightOf, "potted plant")) ==
        "Is the tie to the right of the potted plant?");
  CHECK(render_question(text("sign", "OPEN")) == "Does the sign read \"OPEN\"?");
  CHECK(render_question(style("watercolor")) == "Is the image in watercolor style?");
}

TEST_CASE("round trip of every core type") {
  for (const auto& c :
       {presence("cat"), count("dog", 3), color("car", "blue"),
        spatial("cat", Relation::Below, "table"), text("sign", "Hi \"there\""),
        style("van gogh")}) {
    CHECK(round_trip(c) == c);
  }
  Constraint ff;
  ff.id = 1;
  ff.kind = ConstraintKind::FreeForm;
  ff.question = "a beautiful sunset";
  CHECK(round_trip(ff) == ff);

  const Checklist cl = checklist("two cats", {presence("cat"), count("cat", 2)});
  CHECK(round_trip(cl) == cl);
  CHECK(round_trip(CheckResult{false, "Add a cat"}) == CheckResult{false, "Add a cat"});
  for (Verdict v : {Verdict::Better, Verdict::Same, Verdict::Worse}) {
    CHECK(round_trip(v) == v);
  }
  CHECK(round_trip(Position{3, 29}) == Position{3, 29});

  const EditInstruction ins{
      "do everything",
      {ops::Add{"cat", "red", Position{1, 2}}, ops::Add{"dog", {}, {}},
       ops::Remove{Selector{"cat", 4}}, ops::SetColor{Selector{"car", {}}, "blue"},
       ops::Move{Selector{"cat", {}}, Position{7, 8}}, ops::SetText{Selector{"sign", {}}, "OPEN"},
       ops::SetStyle{"anime"}}};
  CHECK(round_trip(ins) == ins);

  const ImageRef ref{ImageMode::Scene, "scene:abc", "abc"};
  CHECK(round_trip(ref) == ref);
  const RefineConfig cfg{7, 3, 0.25};
  CHECK(round_trip(cfg) == cfg);
}

TEST_CASE("check result wire form is exactly passed and reason") {
  CHECK(canonical_json(CheckResult{true, ""}) == R"({"passed":true,"reason":""})");
}

TEST_CASE("optional fields are omitted from JSON") {
  const Json j = presence("cat");
  CHECK_FALSE(j.contains("color"));
  CHECK_FALSE(j.contains("count"));
  CHECK(j["kind"] == "object_presence");
}

TEST_CASE("malformed JSON input is a parse error") {
  CHECK(code_of([] { Json{{"kind", "nope"}}.get<Constraint>(); }) == Errc::ParseError);
  CHECK(code_of([] { Json{{"op", "teleport"}}.get<EditInstruction>(); }) == Errc::ParseError);
  CHECK(code_of([] { Json::array().get<Checklist>(); }) == Errc::ParseError);
}

TEST_CASE("edit ops are validated") {
  CHECK_NOTHROW(validate_edit_op(ops::Add{"cat", "red", Position{0, 31}}));
  CHECK_THROWS_AS(validate_edit_op(ops::Add{"cat", "mauve", {}}), Error);
  CHECK_THROWS_AS(validate_edit_op(ops::Move{Selector{"cat", {}}, Position{32, 0}}), Error);
  CHECK_THROWS_AS(validate_instruction(EditInstruction{"", {}}), Error);
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(validate_config(RefineConfig{}));
  CHECK_THROWS_AS(validate_config(RefineConfig{0, 2, 0.0}), Error);
  CHECK_THROWS_AS(validate_config(RefineConfig{5, 0, 0.0}), Error);
  CHECK_THROWS_AS(validate_config(RefineConfig{5, 2, -0.1}), Error);
}

TEST_CASE("error messages carry the code name") {
  const Error e(Errc::EmptyPrompt, "prompt is empty");
  CHECK(std::string(e.what()) == "EmptyPrompt: prompt is empty");
  CHECK(e.code() == Errc::EmptyPrompt);
}

TEST_CASE("lexicon inflection") {
  CHECK(lexicon::singularize("pandas") == "panda");
  CHECK(lexicon::singularize("cell phones") == "cell phone");
  CHECK(lexicon::singularize("boxes") == "box");
  CHECK(lexicon::singularize("people") == "person");
  CHECK(lexicon::singularize("glass") == "glass");
  CHECK(lexicon::pluralize("panda") == "pandas");
  CHECK(lexicon::pluralize("box") == "boxes");
  CHECK(lexicon::pluralize("child") == "children");
  CHECK(lexicon::pluralize("potted plant") == "potted plants");
}

TEST_CASE("lexicon vocabularies") {
  CHECK(lexicon::is_color("yellow"));
  CHECK_FALSE(lexicon::is_color("mauve"));
  CHECK(lexicon::numeral_value("five") == 5);
  CHECK(lexicon::numeral_value("12") == 12);
  CHECK_FALSE(lexicon::numeral_value("fifth").has_value());
  CHECK(lexicon::is_reserved("left"));
  CHECK_FALSE(lexicon::is_reserved("panda"));
}

TEST_CASE("sha256 and base64") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(base64_encode("hello") == "aGVsbG8=");
  CHECK(base64_decode("aGVsbG8=") == "hello");
  const std::string bytes("\x00\xff\x10 binary", 10);
  CHECK(base64_decode(base64_encode(bytes)) == bytes);
  CHECK(code_of([] { base64_decode("not base64!"); }) == Errc::ParseError);
}
