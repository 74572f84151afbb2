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

// Mask and box geometry. Masks follow the COCO conventions: polygons are
// flat [x0,y0,x1,y1,...] rings in pixel coordinates, RLE counts run
// column-major and start with a background run.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hicc {

struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  bool valid() const { return w > 0.0 && h > 0.0; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

using Polygons = std::vector<std::vector<double>>;

struct Rle {
  std::vector<std::uint32_t> counts;
  friend bool operator==(const Rle&, const Rle&) = default;
};

struct SegMask {
  std::variant<Polygons, Rle> encoding;
  int height = 0;
  int width = 0;

  bool is_rle() const { return std::holds_alternative<Rle>(encoding); }
  const Rle& rle() const { return std::get<Rle>(encoding); }
  const Polygons& polygons() const { return std::get<Polygons>(encoding); }
};

// Row-major occupancy grid, one byte per pixel (0 or 1).
class BitGrid {
 public:
  BitGrid() = default;
  BitGrid(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return bits_.size(); }

  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool on = true) { bits_[index(x, y)] = on ? 1 : 0; }

  std::span<const std::uint8_t> bits() const { return bits_; }
  std::span<std::uint8_t> bits() { return bits_; }
  std::span<const std::uint8_t> row(int y) const;
  std::span<std::uint8_t> row(int y);

  std::size_t count() const;
  BitGrid& operator|=(const BitGrid& other);

  friend bool operator==(const BitGrid&, const BitGrid&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Pixel (c, r) is set iff its center (c+0.5, r+0.5) lies inside any ring
// (even-odd rule per ring) or inside an RLE foreground run.
BitGrid rasterize(const SegMask& mask, int height, int width);

SegMask rle_encode(const BitGrid& grid);
BitGrid rle_decode(const SegMask& mask);

// COCO's compact string form of RLE counts (the pycocotools "counts" string).
std::string rle_counts_to_string(const Rle& rle);
Rle rle_counts_from_string(std::string_view s);

// Set pixels whose centers fall inside the window, clipped to the grid.
std::size_t mask_area_in_window(const BitGrid& mask, const BBox& window);

double iou_bbox(const BBox& a, const BBox& b);

// Both empty yields 0.
double iou_mask(const BitGrid& a, const BitGrid& b);

// Tight pixel bounding box of the set bits; zero box when empty.
BBox bbox_of(const BitGrid& grid);

}  // namespace hicc
