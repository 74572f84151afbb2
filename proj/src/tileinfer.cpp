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

#include "hicc/tileinfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hicc/error.hpp"
#include "hicc/kernels.hpp"

namespace hicc {

PatchScoreGrid score_image(const std::string& image, int width, int height, Scorer& scorer, const PatchConfig& cfg) {
  cfg.validate();
  if (width < cfg.patch_size || height < cfg.patch_size)
    throw ValidationError(image + ": image " + std::to_string(width) + "x" + std::to_string(height) +
                          " is smaller than the patch size " + std::to_string(cfg.patch_size));
  PatchScoreGrid grid;
  grid.image = image;
  grid.width = width;
  grid.height = height;
  grid.cfg = cfg;
  for (const Window& w : patch_grid(height, width, cfg)) {
    const double s = scorer.score(image, w);
    if (!(s >= 0.0 && s <= 1.0)) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", s);
      throw ProtocolError(scorer.describe() + ": score " + buf + " outside [0, 1] for " + image + " window (" +
                          std::to_string(w.x) + "," + std::to_string(w.y) + "," + std::to_string(w.w) + "," +
                          std::to_string(w.h) + ")");
    }
    grid.windows.push_back(ScoredWindow{w, s});
  }
  return grid;
}

PatchScoreGrid score_image(const std::filesystem::path& image, Scorer& scorer, const PatchConfig& cfg) {
  const auto [w, h] = read_image_size(image);
  return score_image(image.string(), w, h, scorer, cfg);
}

std::string score_recording_jsonl(const PatchScoreGrid& grid) {
  std::string out;
  for (const auto& sw : grid.windows) {
    ojson j;
    j["image"] = grid.image;
    j["x"] = sw.window.x;
    j["y"] = sw.window.y;
    j["w"] = sw.window.w;
    j["h"] = sw.window.h;
    j["score"] = sw.score;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Image render_overlay(const Image& image, const PatchScoreGrid& grid, double tau) {
  Image out = image;
  for (const auto& sw : grid.windows) {
    if (!(sw.score > tau)) continue;
    const Window& w = sw.window;
    for (int y = std::max(w.y, 0); y < std::min(w.y + w.h, out.height); ++y) {
      const int dy = y - w.y;
      const bool full_row = dy < kBorderPx || dy >= w.h - kBorderPx;
      for (int x = std::max(w.x, 0); x < std::min(w.x + w.w, out.width); ++x) {
        const int dx = x - w.x;
        if (!full_row && dx >= kBorderPx && dx < w.w - kBorderPx) continue;
        std::uint8_t* p = out.pixel(x, y);
        p[0] = kMagenta[0];
        p[1] = kMagenta[1];
        p[2] = kMagenta[2];
      }
    }
    // Scale the text with the window: 2x for the default 224 px patch.
    const int scale = std::max(1, std::min(w.w, w.h) / 112);
    char label[32];
    std::snprintf(label, sizeof label, "%.2f", sw.score);
    draw_text(out, w.x + kBorderPx + scale, w.y + kBorderPx + scale, label, kMagenta, scale);
  }
  return out;
}

Heatmap gradcam_lowres(const CamTensors& t) {
  t.validate();
  Heatmap l(t.wc, t.hc);
  const double n = static_cast<double>(t.plane_size());
  for (int k = 0; k < t.k; ++k) {
    const float alpha = static_cast<float>(kernels::sum(t.gradient(k)) / n);
    kernels::axpy(alpha, t.activation(k), l.values);
  }
  kernels::relu(l.values);
  return l;
}

Heatmap upsample_bilinear(const Heatmap& src, int width, int height) {
  if (src.width < 1 || src.height < 1 || width < 1 || height < 1)
    throw ValidationError("upsample_bilinear: empty source or target");
  Heatmap out(width, height);
  const double sx = static_cast<double>(src.width) / width, sy = static_cast<double>(src.height) / height;
  // Precompute the horizontal taps, shared by every row.
  std::vector<int> x0(width), x1(width);
  std::vector<double> fx(width);
  for (int x = 0; x < width; ++x) {
    const double u = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
    x0[x] = static_cast<int>(u);
    x1[x] = std::min(x0[x] + 1, src.width - 1);
    fx[x] = u - x0[x];
  }
  for (int y = 0; y < height; ++y) {
    const double v = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(v), y1 = std::min(y0 + 1, src.height - 1);
    const double fy = v - y0;
    for (int x = 0; x < width; ++x) {
      const double top = src.at(x0[x], y0) * (1.0 - fx[x]) + src.at(x1[x], y0) * fx[x];
      const double bot = src.at(x0[x], y1) * (1.0 - fx[x]) + src.at(x1[x], y1) * fx[x];
      out.at(x, y) = static_cast<float>(top * (1.0 - fy) + bot * fy);
    }
  }
  return out;
}

Heatmap gradcam(const CamTensors& t) { return upsample_bilinear(gradcam_lowres(t), t.window.w, t.window.h); }

Rgb colormap(float t) {
  static constexpr Rgb kStops[5] = {{0, 0, 255}, {0, 255, 255}, {0, 255, 0}, {255, 255, 0}, {255, 0, 0}};
  const double v = std::isnan(t) ? 0.0 : std::clamp(static_cast<double>(t), 0.0, 1.0) * 4.0;
  const int seg = std::min(static_cast<int>(v), 3);
  const double f = v - seg;
  Rgb out;
  for (int c = 0; c < 3; ++c) {
    const double a = kStops[seg][c], b = kStops[seg + 1][c];
    out[c] = static_cast<std::uint8_t>(std::lround(a + (b - a) * f));
  }
  return out;
}

CamComposite composite_cams(const Image& image, std::span<const WindowHeatmap> maps) {
  CamComposite out;
  out.combined = Heatmap(image.width, image.height);
  for (const auto& wm : maps) {
    const Window& w = wm.window;
    if (wm.map.width != w.w || wm.map.height != w.h)
      throw ValidationError("composite_cams: heatmap size does not match its window");
    if (w.x < 0 || w.y < 0 || w.x + w.w > image.width || w.y + w.h > image.height)
      throw ValidationError("composite_cams: window outside the image");
    for (int y = 0; y < w.h; ++y)
      kernels::max_into(wm.map.row(y), out.combined.row(w.y + y).subspan(static_cast<std::size_t>(w.x), w.w));
  }
  const float peak = out.combined.values.empty() ? 0.0f : kernels::max_value(out.combined.values);
  if (peak > 0.0f)
    for (float& v : out.combined.values) v /= peak;

  Image colored(image.width, image.height);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const Rgb c = colormap(out.combined.at(x, y));
      std::uint8_t* p = colored.pixel(x, y);
      p[0] = c[0];
      p[1] = c[1];
      p[2] = c[2];
    }
  out.overlay = Image(image.width, image.height);
  kernels::average_u8(image.rgb, colored.rgb, out.overlay.rgb);
  return out;
}

}  // namespace hicc
