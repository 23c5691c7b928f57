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

#include "veria/image.hpp"

#include <algorithm>
#include <cmath>

#include "veria/error.hpp"

namespace veria {

ImageBuffer::ImageBuffer(int w, int h, Rgb fill) : width(w), height(h) {
  if (w < 0 || h < 0) {
    throw Error(ErrorCode::kInvalidArgument, "negative image size");
  }
  pixels.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill[0];
    pixels[i + 1] = fill[1];
    pixels[i + 2] = fill[2];
  }
}

void ImageBuffer::validate() const {
  if (width < 0 || height < 0 ||
      pixels.size() != static_cast<std::size_t>(width) * height * 3) {
    throw Error(ErrorCode::kInvalidArgument, "pixel count != width * height");
  }
}

Rgb ImageBuffer::at(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

void ImageBuffer::set(int x, int y, Rgb c) {
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  pixels[i] = c[0];
  pixels[i + 1] = c[1];
  pixels[i + 2] = c[2];
}

ImageBuffer ImageBuffer::crop(const geometry::PixelRect& rect) const {
  const auto r = rect.intersect({0, 0, width, height});
  ImageBuffer out(r.width(), r.height());
  for (int y = 0; y < r.height(); ++y) {
    std::copy_n(pixels.begin() + ((static_cast<std::size_t>(r.top + y) * width +
                                   r.left) * 3),
                static_cast<std::size_t>(r.width()) * 3,
                out.pixels.begin() + static_cast<std::size_t>(y) * r.width() * 3);
  }
  return out;
}

void ImageBuffer::paste(const ImageBuffer& src, int left, int top) {
  for (int y = 0; y < src.height; ++y) {
    const int ty = top + y;
    if (ty < 0 || ty >= height) continue;
    for (int x = 0; x < src.width; ++x) {
      const int tx = left + x;
      if (tx < 0 || tx >= width) continue;
      set(tx, ty, src.at(x, y));
    }
  }
}

void ImageBuffer::draw_outline(const geometry::PixelRect& rect, int stroke,
                               Rgb color) {
  const auto r = rect.intersect({0, 0, width, height});
  for (int y = r.top; y < r.bottom; ++y) {
    for (int x = r.left; x < r.right; ++x) {
      const bool edge = x < r.left + stroke || x >= r.right - stroke ||
                        y < r.top + stroke || y >= r.bottom - stroke;
      if (edge) set(x, y, color);
    }
  }
}

double ImageBuffer::gray(int x, int y) const {
  const Rgb c = at(x, y);
  return (0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]) / 255.0;
}

DepthMap::DepthMap(int w, int h)
    : width(w),
      height(h),
      depth(static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0), 0.0),
      valid(depth.size(), 0) {}

void DepthMap::validate() const {
  if (depth.size() != static_cast<std::size_t>(width) * height ||
      valid.size() != depth.size()) {
    throw Error(ErrorCode::kInvalidArgument, "depth map size mismatch");
  }
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (valid[i] && !(depth[i] > 0.0 && std::isfinite(depth[i]))) {
      throw Error(ErrorCode::kInvalidArgument, "valid depth must be > 0");
    }
  }
}

}  // namespace veria
