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

// Tiled inference on full-resolution images: patch-wise scoring through a
// Scorer, magenta-border overlays, Grad-CAM from exported tensors and
// whole-image CAM composites.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hicc/camt.hpp"
#include "hicc/font.hpp"
#include "hicc/image.hpp"
#include "hicc/patchgen.hpp"
#include "hicc/scorer.hpp"

namespace hicc {

struct ScoredWindow {
  Window window;
  double score = 0.0;
};

struct PatchScoreGrid {
  std::string image;  // as passed to the scorer
  int width = 0;
  int height = 0;
  PatchConfig cfg;
  std::vector<ScoredWindow> windows;  // patch_grid order
};

// Throws ValidationError when the image is smaller than the patch and
// ProtocolError when the scorer misbehaves or returns a score outside [0, 1].
PatchScoreGrid score_image(const std::string& image, int width, int height, Scorer& scorer, const PatchConfig& cfg);
// Reads only the image header for its size; decode failures are FormatError.
PatchScoreGrid score_image(const std::filesystem::path& image, Scorer& scorer, const PatchConfig& cfg);

// Score recording lines, replayable through FileScorer.
std::string score_recording_jsonl(const PatchScoreGrid& grid);

inline constexpr Rgb kMagenta = {255, 0, 255};
inline constexpr int kBorderPx = 3;

// Windows with score > tau get a 3-px magenta border and their confidence
// (two decimals) at the upper-left, inside the border.
Image render_overlay(const Image& image, const PatchScoreGrid& grid, double tau = 0.5);

struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<float> values;  // row-major

  Heatmap() = default;
  Heatmap(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0f) {}
  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  std::span<const float> row(int y) const {
    return std::span<const float>(values).subspan(static_cast<std::size_t>(y) * width, static_cast<std::size_t>(width));
  }
  std::span<float> row(int y) {
    return std::span<float>(values).subspan(static_cast<std::size_t>(y) * width, static_cast<std::size_t>(width));
  }
};

// L = ReLU(sum_k alpha_k A_k), alpha_k = spatial mean of G_k, at feature-map
// resolution (wc x hc).
Heatmap gradcam_lowres(const CamTensors& t);
// Half-pixel-centred bilinear resampling with edge clamping.
Heatmap upsample_bilinear(const Heatmap& src, int width, int height);
// gradcam_lowres upsampled to the tensor's window size. Not normalized.
Heatmap gradcam(const CamTensors& t);

struct WindowHeatmap {
  Window window;
  Heatmap map;  // window.w x window.h
};

// Five stops: blue, cyan, green, yellow, red at 0, .25, .5, .75, 1.
Rgb colormap(float t);

struct CamComposite {
  Heatmap combined;  // image-sized, per-pixel max, divided by its maximum
  Image overlay;     // 0.5 blend of colormap(combined) over the source
};

// Throws ValidationError when a heatmap does not match its window or the
// window leaves the image.
CamComposite composite_cams(const Image& image, std::span<const WindowHeatmap> maps);

}  // namespace hicc
