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

#include "refinery/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <iterator>
#include <utility>

namespace refinery::lexicon {
namespace {

constexpr std::array<std::pair<std::string_view, int>, 10> kNumeralWords = {{
    {"one", 1}, {"two", 2}, {"three", 3}, {"four", 4}, {"five", 5},
    {"six", 6}, {"seven", 7}, {"eight", 8}, {"nine", 9}, {"ten", 10},
}};

constexpr std::string_view kStopwords[] = {
    "a",     "an",      "the",     "and",    "of",     "in",      "on",
    "to",    "with",    "that",    "is",     "are",    "at",      "by",
    "for",   "from",    "its",     "it",     "this",   "there",   "some",
    "style", "left",    "right",   "above",  "below",  "reads",   "says",
    "read",  "say",     "clearly", "rendered", "photo", "image",  "picture",
    "exactly", "does",  "do",      "has",    "have",   "any",     "be",
    "how",   "many",    "color",   "colored", "located", "positioned",
    "placed", "visible", "shown",  "which",  "what",   "where",   "or",
    "not",   "no",      "into",    "onto",   "over",   "under",   "near",
    "next",  "beside",  "behind",  "front",  "between", "their",  "his",
    "her",   "each",    "every",   "all",    "both",   "than",    "as"};

constexpr std::array<std::pair<std::string_view, std::string_view>, 10>
    kIrregular = {{
        {"person", "people"},
        {"man", "men"},
        {"woman", "women"},
        {"child", "children"},
        {"mouse", "mice"},
        {"goose", "geese"},
        {"sheep", "sheep"},
        {"fish", "fish"},
        {"knife", "knives"},
        {"tooth", "teeth"},
    }};

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

std::string singular_word(std::string_view w) {
  for (const auto& [one, many] : kIrregular) {
    if (w == many) return std::string(one);
  }
  if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is")) {
    return std::string(w);
  }
  if (ends_with(w, "ies") && w.size() > 3) {
    return std::string(w.substr(0, w.size() - 3)) + "y";
  }
  if (ends_with(w, "sses") || ends_with(w, "ches") || ends_with(w, "shes") ||
      ends_with(w, "xes") || ends_with(w, "zes")) {
    return std::string(w.substr(0, w.size() - 2));
  }
  if (ends_with(w, "s") && w.size() > 1) {
    return std::string(w.substr(0, w.size() - 1));
  }
  return std::string(w);
}

std::string plural_word(std::string_view w) {
  for (const auto& [one, many] : kIrregular) {
    if (w == one) return std::string(many);
  }
  if (ends_with(w, "y") && w.size() > 1 && !is_vowel(w[w.size() - 2])) {
    return std::string(w.substr(0, w.size() - 1)) + "ies";
  }
  if (ends_with(w, "s") || ends_with(w, "ch") || ends_with(w, "sh") ||
      ends_with(w, "x") || ends_with(w, "z")) {
    return std::string(w) + "es";
  }
  return std::string(w) + "s";
}

template <typename Fn>
std::string inflect_last_word(std::string_view noun, Fn fn) {
  auto space = noun.rfind(' ');
  if (space == std::string_view::npos) return fn(noun);
  return std::string(noun.substr(0, space + 1)) + fn(noun.substr(space + 1));
}

}  // namespace

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

bool is_color(std::string_view token) {
  const auto lowered = to_lower(token);
  return std::find(kColors.begin(), kColors.end(), lowered) != kColors.end();
}

std::optional<int> numeral_value(std::string_view token) {
  if (token.empty()) return std::nullopt;
  if (std::all_of(token.begin(), token.end(),
                  [](unsigned char c) { return std::isdigit(c); })) {
    if (token.size() > 6) return std::nullopt;
    return std::stoi(std::string(token));
  }
  const auto lowered = to_lower(token);
  for (const auto& [word, value] : kNumeralWords) {
    if (lowered == word) return value;
  }
  return std::nullopt;
}

bool is_stopword(std::string_view token) {
  const auto lowered = to_lower(token);
  return std::find(std::begin(kStopwords), std::end(kStopwords), lowered) !=
         std::end(kStopwords);
}

bool is_reserved(std::string_view token) {
  return is_color(token) || numeral_value(token).has_value() ||
         is_stopword(token);
}

std::string singularize(std::string_view noun) {
  return inflect_last_word(noun, singular_word);
}

std::string pluralize(std::string_view noun) {
  return inflect_last_word(noun, plural_word);
}

}  // namespace refinery::lexicon
