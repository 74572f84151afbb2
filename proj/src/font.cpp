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

#include "hicc/font.hpp"

namespace hicc {

namespace {

// Rows top to bottom, bit 4 = leftmost column.
using Glyph = std::array<std::uint8_t, kGlyphHeight>;

const Glyph* glyph_for(char c) {
  static constexpr Glyph kDigits[10] = {
      {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
      {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
      {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
      {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
      {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
      {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
      {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
      {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
      {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
      {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
  };
  static constexpr Glyph kDot = {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C};
  static constexpr Glyph kMinus = {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00};
  if (c >= '0' && c <= '9') return &kDigits[c - '0'];
  if (c == '.') return &kDot;
  if (c == '-') return &kMinus;
  return nullptr;
}

}  // namespace

int text_width(std::string_view text, int scale) {
  if (text.empty()) return 0;
  const int n = static_cast<int>(text.size());
  return (n * (kGlyphWidth + 1) - 1) * scale;
}

void draw_text(Image& image, int x, int y, std::string_view text, Rgb color, int scale) {
  if (scale < 1) scale = 1;
  int pen = x;
  for (char c : text) {
    if (const Glyph* g = glyph_for(c)) {
      for (int r = 0; r < kGlyphHeight; ++r) {
        for (int col = 0; col < kGlyphWidth; ++col) {
          if (!((*g)[r] & (0x10 >> col))) continue;
          for (int dy = 0; dy < scale; ++dy) {
            for (int dx = 0; dx < scale; ++dx) {
              const int px = pen + col * scale + dx, py = y + r * scale + dy;
              if (px < 0 || py < 0 || px >= image.width || py >= image.height) continue;
              std::uint8_t* p = image.pixel(px, py);
              p[0] = color[0];
              p[1] = color[1];
              p[2] = color[2];
            }
          }
        }
      }
    }
    pen += (kGlyphWidth + 1) * scale;
  }
}

}  // namespace hicc
