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

#include "veria/image_io.hpp"

#include <atomic>
#include <cstring>
#include <string>

#include <unistd.h>
#include <fstream>
#include <iterator>

#include <png.h>

#include "veria/error.hpp"

namespace veria::image_io {

namespace {

std::vector<std::uint8_t> encode_raw(const std::uint8_t* data, int w, int h,
                                     png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = format;
  image.flags = PNG_IMAGE_FLAG_FAST;
  png_alloc_size_t size = PNG_IMAGE_PNG_SIZE_MAX(image);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, data, 0,
                                 nullptr)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> decode_raw(std::span<const std::uint8_t> bytes,
                                     png_uint_32 format, int& w, int& h) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::kParseError, std::string("png: ") + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> out(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::kParseError, std::string("png: ") + image.message);
  }
  w = static_cast<int>(image.width);
  h = static_cast<int>(image.height);
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const ImageBuffer& image) {
  image.validate();
  return encode_raw(image.pixels.data(), image.width, image.height,
                    PNG_FORMAT_RGB);
}

ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
  ImageBuffer out;
  out.pixels = decode_raw(bytes, PNG_FORMAT_RGB, out.width, out.height);
  return out;
}

std::vector<std::uint8_t> encode_mask_png(const geometry::PixelMask& mask) {
  std::vector<std::uint8_t> gray(mask.bits().size());
  for (std::size_t i = 0; i < gray.size(); ++i) {
    gray[i] = mask.bits()[i] ? 255 : 0;
  }
  return encode_raw(gray.data(), mask.width(), mask.height(), PNG_FORMAT_GRAY);
}

geometry::PixelMask decode_mask_png(std::span<const std::uint8_t> bytes) {
  int w = 0, h = 0;
  const auto gray = decode_raw(bytes, PNG_FORMAT_GRAY, w, h);
  geometry::PixelMask mask(w, h);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    mask.bits()[i] = gray[i] != 0;
  }
  return mask;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingAsset, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  static std::atomic<std::uint64_t> counter{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kInvalidArgument, "cannot write " + tmp.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
  std::filesystem::rename(tmp, path);
}

void write_png(const std::filesystem::path& path, const ImageBuffer& image) {
  write_file_atomic(path, encode_png(image));
}

ImageBuffer read_png(const std::filesystem::path& path) {
  return decode_png(read_file(path));
}

}  // namespace veria::image_io
