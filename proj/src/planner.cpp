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

#include "refinery/planner.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>
#include <span>

#include "refinery/lexicon.hpp"

namespace refinery {

const std::string_view kPlannerPrompt =
    "Given the user prompt P, generate a numbered checklist of verifiable "
    "visual constraints. Each item should be a yes/no question about a "
    "specific compositional element (object, attribute, spatial relation, "
    "count, style, text content).";

namespace {

using Tokens = std::span<const std::string>;

constexpr char kPlaceholderMark = '\x01';

bool is_placeholder(std::string_view token) {
  return !token.empty() && token.front() == kPlaceholderMark;
}

std::size_t placeholder_index(std::string_view token) {
  return static_cast<std::size_t>(std::stoul(std::string(token.substr(1))));
}

bool is_boundary_char(char c) {
  return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ':' ||
         c == '[' || c == ',';
}

bool starts_with_at(std::string_view s, std::size_t i, std::string_view what) {
  return s.substr(i, what.size()) == what;
}

// Quoted literals keep their original case; the rest of the prompt is
// lowercased and split into tokens, commas kept as standalone tokens.
struct Lexed {
  std::vector<std::string> tokens;
  std::vector<std::string> literals;
};

Lexed lex(std::string_view text) {
  Lexed out;
  std::string flat;
  auto push_literal = [&](std::string_view literal) {
    flat += ' ';
    flat += kPlaceholderMark;
    flat += std::to_string(out.literals.size());
    flat += ' ';
    out.literals.emplace_back(literal);
  };

  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const char c = text[i];
    if (c == '"' || c == '`') {
      const auto close = text.find(c, i + 1);
      if (close != std::string_view::npos) {
        push_literal(text.substr(i + 1, close - i - 1));
        i = close + 1;
        continue;
      }
      flat += ' ';
      ++i;
      continue;
    }
    if (starts_with_at(text, i, "\xE2\x80\x9C") || starts_with_at(text, i, "\xE2\x80\x98")) {
      const std::string_view closing =
          text[i + 2] == '\x9C' ? "\xE2\x80\x9D" : "\xE2\x80\x99";
      const auto close = text.find(closing, i + 3);
      if (close != std::string_view::npos) {
        push_literal(text.substr(i + 3, close - i - 3));
        i = close + 3;
        continue;
      }
    }
    if (c == '\'' && (i == 0 || is_boundary_char(text[i - 1]))) {
      std::size_t close = i + 1;
      bool found = false;
      while ((close = text.find('\'', close)) != std::string_view::npos) {
        if (close + 1 == n || !std::isalnum(static_cast<unsigned char>(text[close + 1]))) {
          found = true;
          break;
        }
        ++close;
      }
      if (found && close > i + 1) {
        push_literal(text.substr(i + 1, close - i - 1));
        i = close + 1;
        continue;
      }
    }
    flat += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    ++i;
  }

  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.tokens.push_back(std::move(current));
    current.clear();
  };
  for (char c : flat) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (c == ',') {
      flush();
      out.tokens.emplace_back(",");
    } else if (c == '.' || c == '!' || c == '?' || c == ';' || c == ':' ||
               c == '(' || c == ')' || c == '[' || c == ']') {
      flush();
    } else {
      current += c;
    }
  }
  flush();
  return out;
}

bool is_article(std::string_view t) { return t == "a" || t == "an" || t == "the"; }

bool is_noun_token(std::string_view t) {
  return !is_placeholder(t) && t != "," && !lexicon::is_reserved(t);
}

std::string join(Tokens tokens, const std::vector<std::string>& literals) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty() && t != ",") out += ' ';
    if (is_placeholder(t)) {
      out += '"' + literals.at(placeholder_index(t)) + '"';
    } else {
      out += t;
    }
  }
  return out;
}

struct NounPhrase {
  std::string noun;
  std::optional<int> count;
  std::optional<std::string> color;
};

// [numeral] [color] head [up to two more noun tokens], consuming every token.
std::optional<NounPhrase> parse_noun_phrase(Tokens t) {
  NounPhrase np;
  std::size_t i = 0;
  if (i < t.size()) {
    if (auto n = lexicon::numeral_value(t[i])) {
      if (*n < 1) return std::nullopt;
      np.count = *n;
      ++i;
    }
  }
  if (i < t.size() && lexicon::is_color(t[i])) {
    np.color = t[i];
    ++i;
  }
  if (i >= t.size() || !is_noun_token(t[i])) return std::nullopt;
  std::string noun = t[i++];
  for (int absorbed = 0; absorbed < 2 && i < t.size() && is_noun_token(t[i]);
       ++absorbed) {
    noun += ' ' + t[i++];
  }
  if (i != t.size()) return std::nullopt;
  np.noun = lexicon::singularize(noun);
  return np;
}

struct RelationMatch {
  Relation relation;
  std::size_t begin;  // first token of the phrase
  std::size_t end;    // one past the phrase
};

std::optional<RelationMatch> find_relation(Tokens t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if ((t[i] == "left" || t[i] == "right") && i + 1 < t.size() && t[i + 1] == "of") {
      return RelationMatch{t[i] == "left" ? Relation::LeftOf : Relation::RightOf, i, i + 2};
    }
    if (t[i] == "above") return RelationMatch{Relation::Above, i, i + 1};
    if (t[i] == "below") return RelationMatch{Relation::Below, i, i + 1};
  }
  return std::nullopt;
}

class ChecklistBuilder {
 public:
  explicit ChecklistBuilder(const std::vector<std::string>& literals)
      : literals_(literals) {}

  void segment(Tokens t) {
    if (t.empty()) return;
    if (text_clause(t)) return;
    if (style_clause(t)) return;
    if (auto rel = find_relation(t)) {
      std::size_t lhs_end = rel->begin;
      if (lhs_end > 0 && (t[lhs_end - 1] == "to" || t[lhs_end - 1] == "on")) --lhs_end;
      auto lhs = parse_noun_phrase(t.subspan(0, lhs_end));
      auto rhs = parse_noun_phrase(t.subspan(rel->end));
      if (!lhs || !rhs) return free_form(t);
      noun_phrase(*lhs);
      noun_phrase(*rhs);
      Constraint c;
      c.kind = ConstraintKind::SpatialRelation;
      c.subject = lhs->noun;
      c.object = rhs->noun;
      c.relation = rel->relation;
      add(spatial_, std::move(c));
      last_subject_ = lhs->noun;
      return;
    }
    if (auto np = parse_noun_phrase(t)) return noun_phrase(*np);
    free_form(t);
  }

  Checklist finish(std::string_view prompt) && {
    Checklist out;
    out.prompt = std::string(prompt);
    if (!structured_) {
      Constraint c;
      c.kind = ConstraintKind::FreeForm;
      c.question = out.prompt;
      free_form_ = {c};
    }
    for (auto* bucket : {&presence_, &color_, &count_, &spatial_, &text_,
                         &style_, &free_form_}) {
      for (auto& c : *bucket) {
        c.id = static_cast<int>(out.items.size()) + 1;
        if (c.kind != ConstraintKind::FreeForm) c.question = render_question(c);
        out.items.push_back(std::move(c));
      }
    }
    return out;
  }

 private:
  // "<np> [that] [clearly] reads|says <quote> [rest]"
  bool text_clause(Tokens t) {
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      if ((t[i] != "reads" && t[i] != "says") || !is_placeholder(t[i + 1])) continue;
      std::size_t begin = i;
      if (begin > 0 && t[begin - 1] == "clearly") --begin;
      if (begin > 0 && t[begin - 1] == "that") --begin;
      const auto& literal = literals_.at(placeholder_index(t[i + 1]));
      std::string subject = last_subject_;
      if (begin > 0) {
        auto np = parse_noun_phrase(t.subspan(0, begin));
        if (!np) {
          free_form(t);
          return true;
        }
        noun_phrase(*np);
        subject = np->noun;
      }
      if (subject.empty() || literal.empty()) {
        free_form(t);
        return true;
      }
      Constraint c;
      c.kind = ConstraintKind::TextContent;
      c.subject = subject;
      c.text = literal;
      add(text_, std::move(c));
      trailing_relation(subject, t.subspan(i + 2));
      return true;
    }
    return false;
  }

  // "<text clause> [to|on] <relation> <np>" relates the text bearer to <np>;
  // anything else after the quote is its own segment.
  void trailing_relation(const std::string& subject, Tokens rest) {
    auto rel = find_relation(rest);
    const bool leading =
        rel && (rel->begin == 0 || (rel->begin == 1 && (rest[0] == "to" || rest[0] == "on")));
    if (!leading) return segment(rest);
    auto rhs = parse_noun_phrase(rest.subspan(rel->end));
    if (!rhs) return free_form(rest);
    noun_phrase(*rhs);
    Constraint c;
    c.kind = ConstraintKind::SpatialRelation;
    c.subject = subject;
    c.object = rhs->noun;
    c.relation = rel->relation;
    add(spatial_, std::move(c));
    last_subject_ = subject;
  }

  // "in the style of X", "X style", "rendered [adverb] in X".
  bool style_clause(Tokens t) {
    for (std::size_t i = 0; i + 2 < t.size(); ++i) {
      if (t[i] == "in" && t[i + 1] == "style" && t[i + 2] == "of") {
        auto rest = t.subspan(i + 3);
        if (!plain_words(rest)) return false;
        segment(t.subspan(0, i));
        style(join(rest, literals_));
        return true;
      }
    }
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (t[i] != "style" || !is_noun_token(t[i - 1])) continue;
      std::size_t pre_end = i - 1;
      if (pre_end > 0 && t[pre_end - 1] == "in") --pre_end;
      if (pre_end > 0 && t[pre_end - 1] == "rendered") {
        --pre_end;
      } else if (pre_end > 1 && t[pre_end - 2] == "rendered") {
        pre_end -= 2;
      }
      segment(t.subspan(0, pre_end));
      style(t[i - 1]);
      segment(t.subspan(i + 1));
      return true;
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] != "rendered") continue;
      std::size_t in = i + 1;
      if (in < t.size() && t[in] != "in") ++in;
      if (in >= t.size() || t[in] != "in") continue;
      auto rest = t.subspan(in + 1);
      if (rest.empty() || !plain_words(rest)) return false;
      segment(t.subspan(0, i));
      style(join(rest, literals_));
      return true;
    }
    return false;
  }

  static bool plain_words(Tokens t) {
    return !t.empty() && std::none_of(t.begin(), t.end(), [](const std::string& s) {
      return is_placeholder(s) || s == ",";
    });
  }

  void noun_phrase(const NounPhrase& np) {
    Constraint presence;
    presence.kind = ConstraintKind::ObjectPresence;
    presence.subject = np.noun;
    add(presence_, std::move(presence));
    if (np.color) {
      Constraint c;
      c.kind = ConstraintKind::ColorBinding;
      c.subject = np.noun;
      c.color = np.color;
      add(color_, std::move(c));
    }
    if (np.count) {
      Constraint c;
      c.kind = ConstraintKind::ObjectCount;
      c.subject = np.noun;
      c.count = np.count;
      add(count_, std::move(c));
    }
    last_subject_ = np.noun;
  }

  void style(std::string token) {
    Constraint c;
    c.kind = ConstraintKind::Style;
    c.style = std::move(token);
    add(style_, std::move(c));
  }

  void free_form(Tokens t) {
    Constraint c;
    c.kind = ConstraintKind::FreeForm;
    c.question = join(t, literals_);
    if (std::find(free_form_.begin(), free_form_.end(), c) == free_form_.end()) {
      free_form_.push_back(std::move(c));
    }
  }

  void add(std::vector<Constraint>& bucket, Constraint c) {
    structured_ = true;
    if (std::find(bucket.begin(), bucket.end(), c) == bucket.end()) {
      bucket.push_back(std::move(c));
    }
  }

  const std::vector<std::string>& literals_;
  std::vector<Constraint> presence_, color_, count_, spatial_, text_, style_,
      free_form_;
  std::string last_subject_;
  bool structured_ = false;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Contiguous noun tokens ending at `end` (exclusive), at most three.
std::string noun_before(Tokens t, std::size_t end) {
  std::size_t begin = end;
  while (begin > 0 && end - begin < 3 && is_noun_token(t[begin - 1])) --begin;
  if (begin == end) return {};
  std::string noun;
  for (std::size_t i = begin; i < end; ++i) noun += (noun.empty() ? "" : " ") + t[i];
  return lexicon::singularize(noun);
}

// Contiguous noun tokens starting at `begin`, at most three.
std::string noun_after(Tokens t, std::size_t begin) {
  std::string noun;
  for (std::size_t i = begin; i < t.size() && i < begin + 3 && is_noun_token(t[i]); ++i) {
    noun += (noun.empty() ? "" : " ") + t[i];
  }
  return noun.empty() ? noun : lexicon::singularize(noun);
}

std::optional<Constraint> classify_structured(Tokens t,
                                              const std::vector<std::string>& literals) {
  Constraint c;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    auto n = lexicon::numeral_value(t[i]);
    if (!n || *n < 1) continue;
    auto noun = noun_after(t, i + 1);
    if (noun.empty()) continue;
    c.kind = ConstraintKind::ObjectCount;
    c.subject = noun;
    c.count = *n;
    return c;
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!lexicon::is_color(t[i])) continue;
    auto noun = noun_after(t, i + 1);
    if (noun.empty()) noun = noun_before(t, i);
    if (noun.empty()) continue;
    c.kind = ConstraintKind::ColorBinding;
    c.subject = noun;
    c.color = t[i];
    return c;
  }
  if (auto rel = find_relation(t)) {
    std::size_t lhs_end = rel->begin;
    while (lhs_end > 0 && (t[lhs_end - 1] == "to" || t[lhs_end - 1] == "on" ||
                           is_article(t[lhs_end - 1]))) {
      --lhs_end;
    }
    std::size_t rhs_begin = rel->end;
    while (rhs_begin < t.size() && is_article(t[rhs_begin])) ++rhs_begin;
    auto subject = noun_before(t, lhs_end);
    auto object = noun_after(t, rhs_begin);
    if (!subject.empty() && !object.empty()) {
      c.kind = ConstraintKind::SpatialRelation;
      c.subject = subject;
      c.object = object;
      c.relation = rel->relation;
      return c;
    }
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!is_placeholder(t[i])) continue;
    const auto& literal = literals.at(placeholder_index(t[i]));
    std::size_t end = i;
    while (end > 0 && !is_noun_token(t[end - 1])) --end;
    auto subject = noun_before(t, end);
    if (subject.empty() || literal.empty()) break;
    c.kind = ConstraintKind::TextContent;
    c.subject = subject;
    c.text = literal;
    return c;
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] != "style") continue;
    if (i + 1 < t.size() && t[i + 1] == "of" && i + 2 < t.size()) {
      auto rest = t.subspan(i + 2);
      c.kind = ConstraintKind::Style;
      c.style = join(rest, literals);
      return c;
    }
    if (i > 0 && is_noun_token(t[i - 1])) {
      c.kind = ConstraintKind::Style;
      c.style = t[i - 1];
      return c;
    }
  }
  return std::nullopt;
}

}  // namespace

Checklist plan_rule(std::string_view prompt) {
  const std::string trimmed = trim(prompt);
  if (trimmed.empty()) throw Error(Errc::EmptyPrompt, "prompt is empty");

  Lexed lexed = lex(trimmed);
  auto& tokens = lexed.tokens;
  auto starts_with = [&](std::initializer_list<std::string_view> head) {
    return tokens.size() >= head.size() &&
           std::equal(head.begin(), head.end(), tokens.begin());
  };
  if (starts_with({"a", "photo", "of"}) || starts_with({"an", "image", "of"})) {
    tokens.erase(tokens.begin(), tokens.begin() + 3);
  }
  std::erase_if(tokens, [](const std::string& t) { return is_article(t); });

  ChecklistBuilder builder(lexed.literals);
  std::size_t begin = 0;
  const Tokens all(tokens);
  for (std::size_t i = 0; i <= tokens.size(); ++i) {
    if (i == tokens.size() || tokens[i] == "," || tokens[i] == "and") {
      builder.segment(all.subspan(begin, i - begin));
      begin = i + 1;
    }
  }
  return std::move(builder).finish(trimmed);
}

std::vector<std::string> split_numbered_list(std::string_view content) {
  static const std::regex kMarker(R"((^|\s)(\d{1,3})[.)](\s+|$))");
  const std::string text(content);
  std::vector<std::pair<std::size_t, std::size_t>> markers;  // (start, body)
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kMarker);
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    markers.emplace_back(static_cast<std::size_t>(m.position(0)),
                         static_cast<std::size_t>(m.position(0) + m.length(0)));
  }
  std::vector<std::string> items;
  for (std::size_t k = 0; k < markers.size(); ++k) {
    const std::size_t body = markers[k].second;
    const std::size_t end = k + 1 < markers.size() ? markers[k + 1].first : text.size();
    auto item = trim(std::string_view(text).substr(body, end - body));
    if (!item.empty()) items.push_back(std::move(item));
  }
  return items;
}

Constraint classify_line(int id, std::string_view line) {
  const std::string question = trim(line);
  Lexed lexed = lex(question);
  std::optional<Constraint> structured;
  if (!question.empty()) structured = classify_structured(lexed.tokens, lexed.literals);
  if (structured) {
    structured->id = id;
    structured->question = question;
    try {
      validate_constraint(*structured);
      return *structured;
    } catch (const Error&) {
    }
  }
  Constraint c;
  c.id = id;
  c.kind = ConstraintKind::FreeForm;
  c.question = question;
  return c;
}

Checklist parse_plan_response(std::string_view prompt, std::string_view content) {
  auto items = split_numbered_list(content);
  if (items.empty()) {
    throw Error(Errc::UnparseableResponse, "planner response has no numbered items");
  }
  Checklist out;
  out.prompt = trim(prompt);
  for (const auto& item : items) {
    out.items.push_back(classify_line(static_cast<int>(out.items.size()) + 1, item));
  }
  return out;
}

Checklist plan_remote(std::string_view prompt, ChatTransport& backend,
                      const std::string& model_name) {
  const std::string trimmed = trim(prompt);
  if (trimmed.empty()) throw Error(Errc::EmptyPrompt, "prompt is empty");
  ChatRequest request;
  request.model_name = model_name;
  request.messages.push_back(
      {"user", {ChatPart::of_text(std::string(kPlannerPrompt) + "\n\nUser prompt: " + trimmed)}});
  const ChatResponse response = backend.send(request);
  return parse_plan_response(trimmed, response.content);
}

}  // namespace refinery
