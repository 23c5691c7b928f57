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
#include <filesystem>
#include <span>
#include <vector>

#include "veria/geometry.hpp"
#include "veria/image.hpp"

namespace veria::image_io {

std::vector<std::uint8_t> encode_png(const ImageBuffer& image);
/// Decodes 8-bit gray, gray+alpha, RGB or RGBA PNG into RGB.
ImageBuffer decode_png(std::span<const std::uint8_t> bytes);

/// Masks travel as 8-bit grayscale PNG (0 = unset, nonzero = set).
std::vector<std::uint8_t> encode_mask_png(const geometry::PixelMask& mask);
geometry::PixelMask decode_mask_png(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& path, const ImageBuffer& image);
ImageBuffer read_png(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);

}  // namespace veria::image_io
