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

// Patch-classification datasets from instance-segmentation datasets:
// square windows slid over each image, labeled positive when the union of
// the image's defect masks covers at least area_threshold * patch_size^2
// pixels of the window.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hicc/cocostore.hpp"
#include "hicc/maskgeom.hpp"
#include "hicc/runtime.hpp"

namespace hicc {

enum class Split { train, val, test };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct PatchConfig {
  int patch_size = 224;
  int stride = 112;
  double area_threshold = 0.01;  // fraction of patch area
  bool edge_anchored = false;
  std::string origin_tag = "hicis";
  std::string category;  // only masks of this category name count; empty = all

  void validate() const;
  double threshold_px() const {
    return area_threshold * static_cast<double>(patch_size) * static_cast<double>(patch_size);
  }
  ojson to_json() const;
  static PatchConfig from_json(const ojson& j);
};

struct Window {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  BBox box() const { return BBox{double(x), double(y), double(w), double(h)}; }
  friend bool operator==(const Window&, const Window&) = default;
};

// Start offsets along one axis: 0, s, 2s, ... with start + p <= length, plus
// length - p when anchored and not already present. Empty if length < p.
std::vector<int> axis_positions(int length, int patch, int stride, bool anchored);

// Row-major (y outer, x inner) windows.
std::vector<Window> patch_grid(int height, int width, const PatchConfig& cfg);

struct PatchLabel {
  bool label = false;
  std::size_t mask_area_px = 0;
  friend bool operator==(const PatchLabel&, const PatchLabel&) = default;
};

// Union of the given annotation masks rasterized on the image grid.
BitGrid union_mask(std::span<const SegMask> masks, int height, int width);

PatchLabel label_window(const Window& window, const BitGrid& union_grid, const PatchConfig& cfg);
PatchLabel label_patch(const Window& window, std::span<const SegMask> masks, int height, int width,
                       const PatchConfig& cfg);

struct PatchRecord {
  std::string patch_id;
  std::string source_image;
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  bool label = false;
  std::size_t mask_area_px = 0;
  Split split = Split::train;
  std::string origin;

  friend bool operator==(const PatchRecord&, const PatchRecord&) = default;
};

struct SkippedImage {
  std::string file_name;
  Split split = Split::train;
  std::string reason;
};

struct PatchManifest {
  PatchConfig config;
  std::string dataset_name;
  std::uint64_t seed = 0;
  std::vector<PatchRecord> records;
  std::vector<SkippedImage> skipped;
};

// `HiCC/{origin}-s{stride}-p{patch}`
std::string dataset_name(std::string_view origin, int stride, int patch);

struct SplitInput {
  Split split = Split::train;
  CocoDataset dataset;
};

struct GenerateOptions {
  std::filesystem::path image_dir;
  std::filesystem::path out_dir;  // patches go to out_dir/patches/{split}/
  bool write_patches = true;
  std::uint64_t seed = 0;  // recorded only; generation itself is deterministic
};

// Masks of `image` that count for cfg.category.
std::vector<SegMask> defect_masks(const CocoDataset& ds, const CocoImage& image, const PatchConfig& cfg);

// Records sorted by (source image, y, x) regardless of worker scheduling.
// Unreadable or mis-sized images are skipped and listed in the manifest.
PatchManifest generate(std::span<const SplitInput> inputs, const PatchConfig& cfg, const GenerateOptions& opts);

std::string manifest_jsonl(const PatchManifest& manifest);
void write_manifest(const std::filesystem::path& path, const PatchManifest& manifest);
PatchManifest read_manifest(const std::filesystem::path& path);

struct SplitCounts {
  std::size_t positive = 0;
  std::size_t negative = 0;
  friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

struct PatchStats {
  SplitCounts train;
  SplitCounts val;
  SplitCounts test;

  SplitCounts total() const;
  const SplitCounts& of(Split s) const;
  SplitCounts& of(Split s);
  friend bool operator==(const PatchStats&, const PatchStats&) = default;
};

PatchStats stats(const PatchManifest& manifest);

// Columns: origin, dataset name, then true/false per train/validation/test.
std::string format_stats_table(std::span<const std::pair<std::string, PatchManifest>> rows);

struct SweepRow {
  double area_threshold = 0.0;
  PatchStats stats;
  std::optional<std::size_t> distance;  // L1 distance to the target counts
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::optional<std::size_t> best;  // index into rows, when a target was given
};

// Labels every window once per threshold using image metadata sizes (no
// pixel decoding).
SweepReport threshold_sweep(std::span<const SplitInput> inputs, const PatchConfig& cfg,
                            std::span<const double> thresholds, const std::optional<PatchStats>& target);

ojson sweep_to_json(const SweepReport& report, const PatchConfig& cfg);

}  // namespace hicc
