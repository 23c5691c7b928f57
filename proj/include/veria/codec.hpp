// Copyright 2026 The Veria Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace veria::codec {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws ParseError on malformed input. Whitespace is ignored.
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

/// Little-endian float32 packing used by the depth and point-cloud formats.
void append_f32_le(std::vector<std::uint8_t>& out, float value);
float read_f32_le(std::span<const std::uint8_t> bytes, std::size_t offset);

}  // namespace veria::codec
