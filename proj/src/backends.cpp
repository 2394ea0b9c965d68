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

#include "refinery/backends.hpp"

#include <cctype>
#include <cmath>
#include <optional>

#include "refinery/digest.hpp"
#include "refinery/lexicon.hpp"

namespace refinery {

Verdict verify(const std::string& prompt, const ImageRef& best,
               const ImageRef& candidate, Verifier& verifier) {
  if (best.digest == candidate.digest) return Verdict::Same;
  return verifier.compare(prompt, best, candidate);
}

Verdict compare_scores(double best_score, double candidate_score, double epsilon) {
  const double diff = candidate_score - best_score;
  if (std::abs(diff) <= epsilon) return Verdict::Same;
  return diff > 0.0 ? Verdict::Better : Verdict::Worse;
}

Verdict score_verify(const std::string& prompt, const ImageRef& best,
                     const ImageRef& candidate, Scorer& scorer, double epsilon) {
  double best_score = 0.0;
  double candidate_score = 0.0;
  try {
    best_score = scorer.score(prompt, best);
    candidate_score = scorer.score(prompt, candidate);
  } catch (const Error& e) {
    if (e.code() == Errc::ScorerFailure) throw;
    throw Error(Errc::ScorerFailure, e.what());
  }
  if (!std::isfinite(best_score) || !std::isfinite(candidate_score)) {
    throw Error(Errc::ScorerFailure, "scorer returned a non-finite value");
  }
  return compare_scores(best_score, candidate_score, epsilon);
}

ScoreVerifier::ScoreVerifier(std::shared_ptr<Scorer> scorer, double epsilon)
    : scorer_(std::move(scorer)), epsilon_(epsilon) {
  if (!scorer_) throw Error(Errc::InvalidArgument, "score verifier needs a scorer");
  if (!(epsilon_ >= 0.0)) throw Error(Errc::InvalidArgument, "epsilon must be non-negative");
}

namespace {

constexpr int kMaxNesting = 256;

// End offset (one past the closing brace) of the balanced block opening at
// `start`, honoring JSON string escapes. nullopt if the block never closes
// or nests deeper than kMaxNesting.
std::optional<std::size_t> balanced_end(std::string_view s, std::size_t start) {
  int braces = 0;
  int nesting = 0;
  bool in_string = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_string = true;
        break;
      case '{':
        ++braces;
        if (++nesting > kMaxNesting) return std::nullopt;
        break;
      case '[':
        if (++nesting > kMaxNesting) return std::nullopt;
        break;
      case ']':
        --nesting;
        break;
      case '}':
        --nesting;
        if (--braces == 0) return i + 1;
        break;
      default:
        break;
    }
  }
  return std::nullopt;
}

}  // namespace

CheckResult parse_check_json(std::string_view raw) {
  // The first object that fits the schema wins; an object that parses but
  // does not fit is remembered so the caller learns why nothing matched.
  std::optional<Error> mismatch;
  auto reject = [&](const char* why) {
    if (!mismatch) mismatch = Error(Errc::SchemaMismatch, why);
  };
  for (std::size_t pos = raw.find('{'); pos != std::string_view::npos;
       pos = raw.find('{', pos + 1)) {
    const auto end = balanced_end(raw, pos);
    if (!end) continue;
    const Json j = Json::parse(raw.substr(pos, *end - pos), nullptr,
                               /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) continue;

    auto passed = j.find("passed");
    if (passed == j.end() || !passed->is_boolean()) {
      reject("'passed' must be present and boolean");
      continue;
    }
    CheckResult result;
    result.passed = passed->get<bool>();
    if (auto reason = j.find("reason"); reason != j.end() && !reason->is_null()) {
      if (!reason->is_string()) {
        reject("'reason' must be a string");
        continue;
      }
      result.reason = reason->get<std::string>();
    }
    if (!result.passed && result.reason.empty()) {
      reject("a failing check needs a non-empty reason");
      continue;
    }
    return result;
  }
  if (mismatch) throw *mismatch;
  throw Error(Errc::NoJsonFound, "no JSON object in checker response");
}

Verdict parse_verdict_text(std::string_view text) {
  const std::string lowered = lexicon::to_lower(text);
  std::optional<Verdict> last;
  std::size_t i = 0;
  while (i < lowered.size()) {
    if (!std::isalpha(static_cast<unsigned char>(lowered[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < lowered.size() && std::isalpha(static_cast<unsigned char>(lowered[j]))) ++j;
    const std::string_view word(lowered.data() + i, j - i);
    if (word == "better") last = Verdict::Better;
    if (word == "worse") last = Verdict::Worse;
    if (word == "same") last = Verdict::Same;
    i = j;
  }
  if (!last) {
    throw Error(Errc::UnparseableResponse, "verifier response names no verdict");
  }
  return *last;
}

ImageRef file_image(const std::string& path) {
  return ImageRef{ImageMode::File, path, sha256_hex(read_file_bytes(path))};
}

}  // namespace refinery
