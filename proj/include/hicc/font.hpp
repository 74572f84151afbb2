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

// Embedded 5x7 bitmap font, enough glyphs to print confidences.

#include <array>
#include <cstdint>
#include <string_view>

#include "hicc/image.hpp"

namespace hicc {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;

// Pixel width of `text` at `scale`, one scaled column of spacing between glyphs.
int text_width(std::string_view text, int scale);

// Paints only the set glyph pixels, clipped to the image. Characters
// without a glyph advance the pen and draw nothing.
void draw_text(Image& image, int x, int y, std::string_view text, Rgb color, int scale = 1);

}  // namespace hicc
