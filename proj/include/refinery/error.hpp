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

#include <stdexcept>
#include <string>
#include <string_view>

namespace refinery {

enum class Errc {
  InvalidArgument,
  KindFieldMismatch,
  ParseError,
  EmptyPrompt,
  BackendUnreachable,
  UnparseableResponse,
  NoJsonFound,
  SchemaMismatch,
  EditRejected,
  ScorerFailure,
  UnsupportedKind,
  NoEvaluableConstraints,
  SelectorNotFound,
  AlreadySatisfied,
  CorruptionInfeasible,
  PlannerFailed,
  ConfigNotFound,
  CorruptTrace,
  IoError,
};

std::string_view errc_name(Errc code);

// All library failures surface as refinery::Error carrying a typed code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace refinery
