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
#include <optional>
#include <string>
#include <string_view>

#include "refinery/backends.hpp"
#include "refinery/chat.hpp"

namespace refinery {

// Role instructions sent as the system message of each remote request.
extern const std::string_view kCheckerPrompt;
extern const std::string_view kEditorPrompt;
extern const std::string_view kVerifierPrompt;

struct AgentEndpointConfig {
  std::string base_url;
  std::string model_name;
  int timeout_ms = 60000;
  int max_retries_transport = 2;
  std::optional<std::string> auth_token;
};

void validate_endpoint(const AgentEndpointConfig& config);
void to_json(Json& j, const AgentEndpointConfig& c);
void from_json(const Json& j, AgentEndpointConfig& c);

/// POSTs ChatRequest JSON to {base_url}/chat and decodes {"content": ...}.
///
/// Connection failures and 5xx replies are retried up to
/// max_retries_transport times before surfacing as BackendUnreachable. A
/// fresh connection is opened per request, so instances are freely shared
/// across threads.
class HttpChatTransport final : public ChatTransport {
 public:
  explicit HttpChatTransport(AgentEndpointConfig config);
  ChatResponse send(const ChatRequest& request) override;

 private:
  AgentEndpointConfig config_;
  std::string origin_;
  std::string path_;
};

// Inlines a file-mode image as a base64 part.
ImagePart encode_image(const ImageRef& image);

class RemoteChecker final : public Checker {
 public:
  RemoteChecker(std::shared_ptr<ChatTransport> transport, std::string model_name)
      : transport_(std::move(transport)), model_name_(std::move(model_name)) {}
  CheckResult check(const ImageRef& image, const Constraint& c) override;

 private:
  std::shared_ptr<ChatTransport> transport_;
  std::string model_name_;
};

// Writes each returned image into `output_dir`, named by content digest.
class RemoteEditor final : public Editor {
 public:
  RemoteEditor(std::shared_ptr<ChatTransport> transport, std::string model_name,
               std::string output_dir)
      : transport_(std::move(transport)),
        model_name_(std::move(model_name)),
        output_dir_(std::move(output_dir)) {}
  ImageRef edit(const ImageRef& image, const EditInstruction& instruction) override;

 private:
  std::shared_ptr<ChatTransport> transport_;
  std::string model_name_;
  std::string output_dir_;
};

// Sends the previous-best image first and the candidate second.
class RemoteVerifier final : public Verifier {
 public:
  RemoteVerifier(std::shared_ptr<ChatTransport> transport, std::string model_name)
      : transport_(std::move(transport)), model_name_(std::move(model_name)) {}
  Verdict compare(const std::string& prompt, const ImageRef& best,
                  const ImageRef& candidate) override;

 private:
  std::shared_ptr<ChatTransport> transport_;
  std::string model_name_;
};

}  // namespace refinery
