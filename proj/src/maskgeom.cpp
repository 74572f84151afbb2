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

#include "hicc/maskgeom.hpp"

#include <algorithm>
#include <cmath>

#include "hicc/error.hpp"
#include "hicc/kernels.hpp"

namespace hicc {

BitGrid::BitGrid(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw ValidationError("BitGrid: negative dimensions");
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

std::span<const std::uint8_t> BitGrid::row(int y) const {
  return std::span<const std::uint8_t>(bits_).subspan(index(0, y), static_cast<std::size_t>(width_));
}

std::span<std::uint8_t> BitGrid::row(int y) {
  return std::span<std::uint8_t>(bits_).subspan(index(0, y), static_cast<std::size_t>(width_));
}

std::size_t BitGrid::count() const { return kernels::count_nonzero(bits_); }

BitGrid& BitGrid::operator|=(const BitGrid& other) {
  if (other.width_ != width_ || other.height_ != height_)
    throw ValidationError("BitGrid union: dimension mismatch");
  kernels::or_into(other.bits_, bits_);
  return *this;
}

namespace {

void fill_ring(const std::vector<double>& ring, BitGrid& grid) {
  const std::size_t n = ring.size() / 2;
  std::vector<double> crossings;
  for (int r = 0; r < grid.height(); ++r) {
    const double yc = r + 0.5;
    crossings.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const double xi = ring[2 * i], yi = ring[2 * i + 1];
      const double xj = ring[2 * j], yj = ring[2 * j + 1];
      if ((yi > yc) != (yj > yc)) crossings.push_back(xi + (yc - yi) * (xj - xi) / (yj - yi));
    }
    if (crossings.empty()) continue;
    std::sort(crossings.begin(), crossings.end());
    auto row = grid.row(r);
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
      // centers c + 0.5 in [a, b)
      const double a = std::ceil(crossings[k] - 0.5);
      const double b = std::ceil(crossings[k + 1] - 0.5);
      const int c0 = static_cast<int>(std::clamp(a, 0.0, static_cast<double>(grid.width())));
      const int c1 = static_cast<int>(std::clamp(b, 0.0, static_cast<double>(grid.width())));
      for (int c = c0; c < c1; ++c) row[static_cast<std::size_t>(c)] = 1;
    }
  }
}

void check_rle_total(const Rle& rle, int height, int width) {
  std::uint64_t total = 0;
  for (auto c : rle.counts) total += c;
  const auto expect = static_cast<std::uint64_t>(height) * static_cast<std::uint64_t>(width);
  if (total != expect)
    throw FormatError("RLE counts sum to " + std::to_string(total) + ", expected " +
                      std::to_string(expect) + " (" + std::to_string(height) + "x" +
                      std::to_string(width) + ")");
}

}  // namespace

BitGrid rasterize(const SegMask& mask, int height, int width) {
  if (mask.height != height || mask.width != width)
    throw ValidationError("rasterize: mask size " + std::to_string(mask.height) + "x" +
                          std::to_string(mask.width) + " does not match " + std::to_string(height) +
                          "x" + std::to_string(width));
  if (mask.is_rle()) return rle_decode(mask);
  BitGrid grid(width, height);
  for (const auto& ring : mask.polygons()) {
    if (ring.size() % 2 != 0)
      throw FormatError("polygon ring has odd coordinate count " + std::to_string(ring.size()));
    if (ring.size() < 6)
      throw FormatError("polygon ring needs at least 3 vertices, got " + std::to_string(ring.size() / 2));
    fill_ring(ring, grid);
  }
  return grid;
}

SegMask rle_encode(const BitGrid& grid) {
  Rle rle;
  std::uint8_t prev = 0;
  std::uint32_t run = 0;
  for (int x = 0; x < grid.width(); ++x) {
    for (int y = 0; y < grid.height(); ++y) {
      const std::uint8_t v = grid.at(x, y) ? 1 : 0;
      if (v != prev) {
        rle.counts.push_back(run);
        run = 0;
        prev = v;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return SegMask{std::move(rle), grid.height(), grid.width()};
}

BitGrid rle_decode(const SegMask& mask) {
  if (!mask.is_rle()) throw ValidationError("rle_decode: mask is not RLE-encoded");
  const Rle& rle = mask.rle();
  check_rle_total(rle, mask.height, mask.width);
  BitGrid grid(mask.width, mask.height);
  const auto h = static_cast<std::size_t>(mask.height);
  std::size_t pos = 0;
  bool on = false;
  for (auto run : rle.counts) {
    if (on) {
      for (std::size_t i = pos; i < pos + run; ++i)
        grid.set(static_cast<int>(i / h), static_cast<int>(i % h));
    }
    pos += run;
    on = !on;
  }
  return grid;
}

std::string rle_counts_to_string(const Rle& rle) {
  std::string s;
  const auto& cnts = rle.counts;
  for (std::size_t i = 0; i < cnts.size(); ++i) {
    long long x = cnts[i];
    if (i > 2) x -= static_cast<long long>(cnts[i - 2]);
    bool more = true;
    while (more) {
      char c = static_cast<char>(x & 0x1f);
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      s.push_back(static_cast<char>(c + 48));
    }
  }
  return s;
}

Rle rle_counts_from_string(std::string_view s) {
  Rle rle;
  std::size_t p = 0;
  while (p < s.size()) {
    long long x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= s.size()) throw FormatError("truncated compressed RLE string");
      const int c = static_cast<int>(static_cast<unsigned char>(s[p])) - 48;
      if (c < 0 || c > 63) throw FormatError("invalid character in compressed RLE string");
      x |= static_cast<long long>(c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= -1LL << (5 * k);
    }
    const std::size_t m = rle.counts.size();
    if (m > 2) x += rle.counts[m - 2];
    if (x < 0 || x > 0xffffffffLL) throw FormatError("compressed RLE run out of range");
    rle.counts.push_back(static_cast<std::uint32_t>(x));
  }
  return rle;
}

std::size_t mask_area_in_window(const BitGrid& mask, const BBox& window) {
  auto clip = [](double v, int hi) {
    return static_cast<int>(std::clamp(std::ceil(v - 0.5), 0.0, static_cast<double>(hi)));
  };
  const int x0 = clip(window.x, mask.width());
  const int x1 = clip(window.x + window.w, mask.width());
  const int y0 = clip(window.y, mask.height());
  const int y1 = clip(window.y + window.h, mask.height());
  if (x1 <= x0 || y1 <= y0) return 0;
  std::size_t total = 0;
  for (int y = y0; y < y1; ++y)
    total += kernels::count_nonzero(mask.row(y).subspan(static_cast<std::size_t>(x0),
                                                        static_cast<std::size_t>(x1 - x0)));
  return total;
}

double iou_bbox(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double iou_mask(const BitGrid& a, const BitGrid& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw ValidationError("iou_mask: dimension mismatch");
  const auto counts = kernels::overlap_counts(a.bits(), b.bits());
  if (counts.union_ == 0) return 0.0;
  return static_cast<double>(counts.intersection) / static_cast<double>(counts.union_);
}

BBox bbox_of(const BitGrid& grid) {
  int x0 = grid.width(), y0 = grid.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < grid.height(); ++y)
    for (int x = 0; x < grid.width(); ++x)
      if (grid.at(x, y)) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return {};
  return BBox{double(x0), double(y0), double(x1 - x0 + 1), double(y1 - y0 + 1)};
}

}  // namespace hicc
