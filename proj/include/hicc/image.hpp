// Copyright 2026 The HiCC Toolkit Authors
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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hicc {

// 8-bit interleaved RGB raster.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0);

  std::uint8_t* pixel(int x, int y) {
    return rgb.data() + (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
  }
  const std::uint8_t* pixel(int x, int y) const {
    return rgb.data() + (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
  }
  std::span<std::uint8_t> row(int y) {
    return std::span<std::uint8_t>(rgb).subspan(static_cast<std::size_t>(y) * width * 3, static_cast<std::size_t>(width) * 3);
  }
  std::span<const std::uint8_t> row(int y) const {
    return std::span<const std::uint8_t>(rgb).subspan(static_cast<std::size_t>(y) * width * 3, static_cast<std::size_t>(width) * 3);
  }

  friend bool operator==(const Image&, const Image&) = default;
};

using PngText = std::vector<std::pair<std::string, std::string>>;

// Decodes PNG or JPEG (detected by signature). Grayscale is expanded to
// RGB and alpha is dropped. Throws FormatError on decode failure.
Image read_image(const std::filesystem::path& path);

// Reads only the header to obtain (width, height).
std::pair<int, int> read_image_size(const std::filesystem::path& path);

// Deterministic PNG encoding; `text` becomes tEXt chunks.
void write_png(const std::filesystem::path& path, const Image& image, const PngText& text = {});
std::vector<std::uint8_t> encode_png(const Image& image, const PngText& text = {});

// Reads tEXt chunks back (used to check embedded run headers).
PngText read_png_text(const std::filesystem::path& path);

void write_jpeg(const std::filesystem::path& path, const Image& image, int quality = 95);

Image crop(const Image& image, int x, int y, int w, int h);

}  // namespace hicc
