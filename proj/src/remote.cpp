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

#include "refinery/remote.hpp"

#include <httplib.h>

#include <filesystem>
#include <regex>

#include "refinery/digest.hpp"

namespace refinery {

const std::string_view kCheckerPrompt =
    "Given image I and constraint c_i, determine if c_i is satisfied. Respond "
    "with JSON: {\"passed\": true/false, \"reason\": \"explanation\"}. If "
    "false, the reason should be an actionable edit instruction.";

const std::string_view kEditorPrompt =
    "Execute the edit instruction on image I to produce I'.";

const std::string_view kVerifierPrompt =
    "Given original prompt P, previous-best image I_best, and candidate I', "
    "determine which better satisfies P. Respond with: \"better\", \"worse\", "
    "or \"same\".";

void validate_endpoint(const AgentEndpointConfig& config) {
  static const std::regex kUrl(R"(^https?://[^/\s]+(/\S*)?$)");
  if (!std::regex_match(config.base_url, kUrl)) {
    throw Error(Errc::InvalidArgument, "base_url must be an http(s) URL: '" +
                                           config.base_url + "'");
  }
  if (config.timeout_ms < 1000) {
    throw Error(Errc::InvalidArgument, "timeout_ms must be at least 1000");
  }
  if (config.max_retries_transport < 0) {
    throw Error(Errc::InvalidArgument, "max_retries_transport must be non-negative");
  }
}

void to_json(Json& j, const AgentEndpointConfig& c) {
  j = Json{{"base_url", c.base_url},
           {"model_name", c.model_name},
           {"timeout_ms", c.timeout_ms},
           {"max_retries_transport", c.max_retries_transport}};
  if (c.auth_token) j["auth_token"] = *c.auth_token;
}

void from_json(const Json& j, AgentEndpointConfig& c) {
  c = AgentEndpointConfig{};
  if (!j.is_object() || !j.contains("base_url") || !j["base_url"].is_string()) {
    throw Error(Errc::ParseError, "endpoint needs a string base_url");
  }
  c.base_url = j["base_url"].get<std::string>();
  if (auto it = j.find("model_name"); it != j.end() && it->is_string()) {
    c.model_name = it->get<std::string>();
  }
  if (auto it = j.find("timeout_ms"); it != j.end()) {
    if (!it->is_number_integer()) throw Error(Errc::ParseError, "timeout_ms must be an integer");
    c.timeout_ms = it->get<int>();
  }
  if (auto it = j.find("max_retries_transport"); it != j.end()) {
    if (!it->is_number_integer()) {
      throw Error(Errc::ParseError, "max_retries_transport must be an integer");
    }
    c.max_retries_transport = it->get<int>();
  }
  if (auto it = j.find("auth_token"); it != j.end() && it->is_string()) {
    c.auth_token = it->get<std::string>();
  }
}

HttpChatTransport::HttpChatTransport(AgentEndpointConfig config)
    : config_(std::move(config)) {
  validate_endpoint(config_);
  const auto scheme_end = config_.base_url.find("://") + 3;
  const auto path_begin = config_.base_url.find('/', scheme_end);
  origin_ = config_.base_url.substr(0, path_begin);
  path_ = path_begin == std::string::npos ? "" : config_.base_url.substr(path_begin);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat";
}

ChatResponse HttpChatTransport::send(const ChatRequest& request) {
  validate_request(request);
  const std::string body = Json(request).dump();
  httplib::Headers headers;
  if (config_.auth_token) {
    headers.emplace("Authorization", "Bearer " + *config_.auth_token);
  }

  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  std::string last_failure;
  for (int attempt = 0; attempt <= config_.max_retries_transport; ++attempt) {
    httplib::Client client(origin_);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto result = client.Post(path_, headers, body, "application/json");
    if (!result) {
      last_failure = httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 500) {
      last_failure = "HTTP " + std::to_string(result->status);
      continue;
    }
    if (result->status < 200 || result->status >= 300) {
      throw Error(Errc::BackendUnreachable, config_.base_url + " answered HTTP " +
                                                std::to_string(result->status));
    }
    const Json j = Json::parse(result->body, nullptr, false);
    if (j.is_discarded()) {
      throw Error(Errc::UnparseableResponse, "response body is not JSON");
    }
    try {
      return j.get<ChatResponse>();
    } catch (const Error& e) {
      throw Error(Errc::UnparseableResponse, e.what());
    }
  }
  throw Error(Errc::BackendUnreachable, config_.base_url + ": " + last_failure);
}

ImagePart encode_image(const ImageRef& image) {
  if (image.mode != ImageMode::File) {
    throw Error(Errc::InvalidArgument,
                "remote backends need file images, got '" + image.locator + "'");
  }
  return ImagePart{media_type_for_path(image.locator),
                   base64_encode(read_file_bytes(image.locator))};
}

CheckResult RemoteChecker::check(const ImageRef& image, const Constraint& c) {
  ImagePart encoded = encode_image(image);
  ChatRequest request;
  request.model_name = model_name_;
  request.messages.push_back({"system", {ChatPart::of_text(std::string(kCheckerPrompt))}});
  request.messages.push_back({"user",
                              {ChatPart::of_text("Constraint: " + c.question),
                               ChatPart::of_image(std::move(encoded))}});
  const ChatResponse response = transport_->send(request);
  try {
    return parse_check_json(response.content);
  } catch (const Error& e) {
    throw Error(Errc::UnparseableResponse, e.what());
  }
}

ImageRef RemoteEditor::edit(const ImageRef& image, const EditInstruction& instruction) {
  if (instruction.surface.empty()) {
    throw Error(Errc::InvalidArgument, "edit instruction surface is empty");
  }
  ImagePart encoded = encode_image(image);
  ChatRequest request;
  request.model_name = model_name_;
  request.messages.push_back({"system", {ChatPart::of_text(std::string(kEditorPrompt))}});
  request.messages.push_back({"user",
                              {ChatPart::of_text("Edit instruction: " + instruction.surface),
                               ChatPart::of_image(std::move(encoded))}});
  const ChatResponse response = transport_->send(request);
  if (!response.image) {
    throw Error(Errc::EditRejected, response.content.empty()
                                        ? "editor returned no image"
                                        : response.content);
  }
  std::string bytes;
  try {
    bytes = base64_decode(response.image->data_base64);
  } catch (const Error& e) {
    throw Error(Errc::UnparseableResponse, e.what());
  }
  const std::string digest = sha256_hex(bytes);
  if (digest == image.digest) return image;

  const auto path = std::filesystem::path(output_dir_) /
                    (digest.substr(0, 16) + extension_for_media_type(response.image->media_type));
  write_file_bytes(path.string(), bytes);
  return ImageRef{ImageMode::File, path.string(), digest};
}

Verdict RemoteVerifier::compare(const std::string& prompt, const ImageRef& best,
                                const ImageRef& candidate) {
  ImagePart encoded_best = encode_image(best);
  ImagePart encoded_candidate = encode_image(candidate);
  ChatRequest request;
  request.model_name = model_name_;
  request.messages.push_back(
      {"system",
       {ChatPart::of_text(std::string(kVerifierPrompt) +
                          " The first image is the previous-best image; the "
                          "second image is the candidate. Judge the candidate.")}});
  request.messages.push_back({"user",
                              {ChatPart::of_text("Prompt: " + prompt),
                               ChatPart::of_image(std::move(encoded_best)),
                               ChatPart::of_image(std::move(encoded_candidate))}});
  return parse_verdict_text(transport_->send(request).content);
}

}  // namespace refinery
