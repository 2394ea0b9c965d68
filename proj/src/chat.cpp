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

#include "refinery/chat.hpp"

#include <filesystem>

#include "refinery/lexicon.hpp"

namespace refinery {
namespace {

[[noreturn]] void bad(const std::string& what) {
  throw Error(Errc::ParseError, what);
}

}  // namespace

std::size_t image_count(const ChatRequest& request) {
  std::size_t n = 0;
  for (const auto& m : request.messages) {
    for (const auto& p : m.parts) n += p.image.has_value() ? 1 : 0;
  }
  return n;
}

void validate_request(const ChatRequest& request) {
  for (const auto& m : request.messages) {
    if (m.role != "system" && m.role != "user") {
      throw Error(Errc::InvalidArgument, "message role must be system or user");
    }
    for (const auto& p : m.parts) {
      if (p.text.has_value() == p.image.has_value()) {
        throw Error(Errc::InvalidArgument,
                    "a message part carries exactly one of text or image");
      }
    }
  }
  if (image_count(request) > kMaxImagesPerRequest) {
    throw Error(Errc::InvalidArgument, "at most 2 images per request");
  }
}

void to_json(Json& j, const ImagePart& p) {
  j = Json{{"media_type", p.media_type}, {"data", p.data_base64}};
}

void from_json(const Json& j, ImagePart& p) {
  if (!j.is_object() || !j.contains("media_type") || !j.contains("data") ||
      !j["media_type"].is_string() || !j["data"].is_string()) {
    bad("image part needs string media_type and data");
  }
  p.media_type = j["media_type"].get<std::string>();
  p.data_base64 = j["data"].get<std::string>();
}

void to_json(Json& j, const ChatPart& p) {
  if (p.text) {
    j = Json{{"text", *p.text}};
  } else if (p.image) {
    j = Json{{"image", *p.image}};
  } else {
    j = Json::object();
  }
}

void from_json(const Json& j, ChatPart& p) {
  p = ChatPart{};
  if (!j.is_object()) bad("message part must be an object");
  if (auto it = j.find("text"); it != j.end()) {
    if (!it->is_string()) bad("text part must be a string");
    p.text = it->get<std::string>();
  }
  if (auto it = j.find("image"); it != j.end()) p.image = it->get<ImagePart>();
  if (p.text.has_value() == p.image.has_value()) {
    bad("message part must carry exactly one of text or image");
  }
}

void to_json(Json& j, const ChatMessage& m) {
  j = Json{{"role", m.role}, {"parts", m.parts}};
}

void from_json(const Json& j, ChatMessage& m) {
  if (!j.is_object() || !j.contains("role") || !j["role"].is_string() ||
      !j.contains("parts") || !j["parts"].is_array()) {
    bad("message needs a role and a parts array");
  }
  m.role = j["role"].get<std::string>();
  m.parts.clear();
  for (const auto& p : j["parts"]) m.parts.push_back(p.get<ChatPart>());
}

void to_json(Json& j, const ChatRequest& r) {
  j = Json{{"model_name", r.model_name}, {"messages", r.messages}};
}

void from_json(const Json& j, ChatRequest& r) {
  if (!j.is_object() || !j.contains("model_name") || !j["model_name"].is_string() ||
      !j.contains("messages") || !j["messages"].is_array()) {
    bad("request needs model_name and a messages array");
  }
  r.model_name = j["model_name"].get<std::string>();
  r.messages.clear();
  for (const auto& m : j["messages"]) r.messages.push_back(m.get<ChatMessage>());
}

void to_json(Json& j, const ChatResponse& r) {
  j = Json{{"content", r.content}};
  if (r.image) j["image"] = *r.image;
}

void from_json(const Json& j, ChatResponse& r) {
  if (!j.is_object() || !j.contains("content") || !j["content"].is_string()) {
    bad("response needs a string content field");
  }
  r.content = j["content"].get<std::string>();
  r.image.reset();
  if (auto it = j.find("image"); it != j.end() && !it->is_null()) {
    r.image = it->get<ImagePart>();
  }
}

std::string media_type_for_path(const std::string& path) {
  const auto ext = lexicon::to_lower(std::filesystem::path(path).extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  if (ext == ".json") return "application/json";
  return "application/octet-stream";
}

std::string extension_for_media_type(const std::string& media_type) {
  if (media_type == "image/png") return ".png";
  if (media_type == "image/jpeg") return ".jpg";
  if (media_type == "image/webp") return ".webp";
  if (media_type == "image/gif") return ".gif";
  if (media_type == "application/json") return ".json";
  return ".bin";
}

}  // namespace refinery
