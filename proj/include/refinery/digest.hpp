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

#include <string>
#include <string_view>

namespace refinery {

// Lowercase hex SHA-256 of raw bytes.
std::string sha256_hex(std::string_view bytes);

std::string base64_encode(std::string_view bytes);
// Throws Error(ParseError) on malformed input.
std::string base64_decode(std::string_view text);

std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::string_view bytes);

}  // namespace refinery
