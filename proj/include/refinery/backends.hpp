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

#include "refinery/core.hpp"

namespace refinery {

/// Checker with an attached refiner.
///
/// check() returns the fused verdict; a failed CheckResult's reason is the
/// edit instruction. Backends that can express that instruction in
/// structured form (the simulator) override refine() to attach ops.
class Checker {
 public:
  virtual ~Checker() = default;
  virtual CheckResult check(const ImageRef& image, const Constraint& c) = 0;

  virtual EditInstruction refine(const ImageRef& /*image*/, const Constraint& /*c*/,
                                 const CheckResult& result) {
    return EditInstruction{result.reason, {}};
  }
};

// Returns a new image; never mutates the input. Throws Error(EditRejected)
// when the backend refuses or cannot carry out the edit.
class Editor {
 public:
  virtual ~Editor() = default;
  virtual ImageRef edit(const ImageRef& image, const EditInstruction& instruction) = 0;
};

// Judges `candidate` relative to `best` under `prompt`.
class Verifier {
 public:
  virtual ~Verifier() = default;
  virtual Verdict compare(const std::string& prompt, const ImageRef& best,
                          const ImageRef& candidate) = 0;
};

// Prompt/image alignment in [0, 1].
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(const std::string& prompt, const ImageRef& image) = 0;
};

// Identical digests short-circuit to Same without consulting the backend.
Verdict verify(const std::string& prompt, const ImageRef& best,
               const ImageRef& candidate, Verifier& verifier);

// Better iff candidate > best + epsilon; Same iff |difference| <= epsilon.
Verdict compare_scores(double best_score, double candidate_score, double epsilon);

// Throws Error(ScorerFailure) if the scorer fails or yields a non-finite value.
Verdict score_verify(const std::string& prompt, const ImageRef& best,
                     const ImageRef& candidate, Scorer& scorer, double epsilon);

class ScoreVerifier final : public Verifier {
 public:
  ScoreVerifier(std::shared_ptr<Scorer> scorer, double epsilon);

  Verdict compare(const std::string& prompt, const ImageRef& best,
                  const ImageRef& candidate) override {
    return score_verify(prompt, best, candidate, *scorer_, epsilon_);
  }

 private:
  std::shared_ptr<Scorer> scorer_;
  double epsilon_;
};

/// Extracts the first balanced {...} block of `raw` that parses as a JSON
/// object, tolerating chatter and code fences around it, and validates it as
/// a CheckResult.
///
/// Throws Error(NoJsonFound) when no block parses, Error(SchemaMismatch)
/// when it does but `passed` is missing or non-boolean, `reason` is not a
/// string, or a failing result has an empty reason.
CheckResult parse_check_json(std::string_view raw);

// Case-insensitive whole-word scan for better/worse/same; the last
// occurrence wins. Throws Error(UnparseableResponse) if none occurs.
Verdict parse_verdict_text(std::string_view text);

// File-mode reference with the SHA-256 of the file's bytes.
ImageRef file_image(const std::string& path);

}  // namespace refinery
