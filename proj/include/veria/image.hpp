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

#include <array>
#include <cstdint>
#include <vector>

#include "veria/geometry.hpp"

namespace veria {

using Rgb = std::array<std::uint8_t, 3>;

/// Row-major 8-bit RGB image.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 * width * height

  ImageBuffer() = default;
  ImageBuffer(int w, int h, Rgb fill = {0, 0, 0});

  void validate() const;
  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);

  ImageBuffer crop(const geometry::PixelRect& rect) const;
  /// Copies src into this image with its top-left corner at (left, top).
  void paste(const ImageBuffer& src, int left, int top);
  /// Rectangle outline of the given stroke width drawn inside rect.
  void draw_outline(const geometry::PixelRect& rect, int stroke, Rgb color);
  /// Luma in [0, 1] (BT.601 weights).
  double gray(int x, int y) const;

  bool operator==(const ImageBuffer&) const = default;
};

/// Per-pixel metric depth with a validity mask.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<std::uint8_t> valid;

  DepthMap() = default;
  DepthMap(int w, int h);

  double at(int x, int y) const { return depth[index(x, y)]; }
  bool is_valid(int x, int y) const { return valid[index(x, y)] != 0; }
  void set(int x, int y, double d) {
    depth[index(x, y)] = d;
    valid[index(x, y)] = 1;
  }
  void validate() const;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
};

}  // namespace veria
