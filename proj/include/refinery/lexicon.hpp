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

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace refinery::lexicon {

inline constexpr std::array<std::string_view, 11> kColors = {
    "red",   "orange", "yellow", "green", "blue", "purple",
    "pink",  "brown",  "black",  "white", "gray"};

inline constexpr std::string_view kUncolored = "uncolored";

bool is_color(std::string_view token);

// one..ten and plain digit strings; case-insensitive.
std::optional<int> numeral_value(std::string_view token);

bool is_stopword(std::string_view token);

// True for any token with grammatical meaning to the rule planner: colors,
// numerals, relation/marker words and stopwords. Such tokens never become
// part of a noun.
bool is_reserved(std::string_view token);

std::string to_lower(std::string_view text);

// English number agreement for category nouns. Only the last word of a
// multi-word noun is inflected ("tv remotes" <-> "tv remote").
std::string singularize(std::string_view noun);
std::string pluralize(std::string_view noun);

}  // namespace refinery::lexicon
