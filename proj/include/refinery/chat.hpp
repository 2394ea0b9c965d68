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

#include <optional>
#include <string>
#include <vector>

#include "refinery/core.hpp"

namespace refinery {

inline constexpr std::size_t kMaxImagesPerRequest = 2;

struct ImagePart {
  std::string media_type;
  std::string data_base64;

  friend bool operator==(const ImagePart&, const ImagePart&) = default;
};

// Exactly one of text / image is set.
struct ChatPart {
  std::optional<std::string> text;
  std::optional<ImagePart> image;

  static ChatPart of_text(std::string t) { return ChatPart{std::move(t), std::nullopt}; }
  static ChatPart of_image(ImagePart i) { return ChatPart{std::nullopt, std::move(i)}; }

  friend bool operator==(const ChatPart&, const ChatPart&) = default;
};

struct ChatMessage {
  std::string role;  // "system" or "user"
  std::vector<ChatPart> parts;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
  std::string model_name;
  std::vector<ChatMessage> messages;

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

struct ChatResponse {
  std::string content;
  // Only editor services attach an image.
  std::optional<ImagePart> image;

  friend bool operator==(const ChatResponse&, const ChatResponse&) = default;
};

// Roles, part exclusivity and the per-request image cap.
void validate_request(const ChatRequest& request);
std::size_t image_count(const ChatRequest& request);

void to_json(Json& j, const ImagePart& p);
void from_json(const Json& j, ImagePart& p);
void to_json(Json& j, const ChatPart& p);
void from_json(const Json& j, ChatPart& p);
void to_json(Json& j, const ChatMessage& m);
void from_json(const Json& j, ChatMessage& m);
void to_json(Json& j, const ChatRequest& r);
void from_json(const Json& j, ChatRequest& r);
void to_json(Json& j, const ChatResponse& r);
void from_json(const Json& j, ChatResponse& r);

/// One blocking request/response exchange with a model service.
///
/// Implementations must be safe to call from several threads at once.
/// Transport-level failures surface as Error(BackendUnreachable) only after
/// the implementation's own retry budget is spent.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual ChatResponse send(const ChatRequest& request) = 0;
};

// Media type inferred from a file extension; application/octet-stream when
// unknown.
std::string media_type_for_path(const std::string& path);
std::string extension_for_media_type(const std::string& media_type);

}  // namespace refinery
