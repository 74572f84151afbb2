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

// COCO ground-truth datasets and detector result files.
//
// Unknown keys on every object (and at the top level) are carried through
// `extra` so that load -> save preserves them in their original order.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hicc/maskgeom.hpp"
#include "hicc/runtime.hpp"

namespace hicc {

struct CocoImage {
  std::int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  ojson extra = ojson::object();
};

struct CocoAnnotation {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  SegMask segmentation;
  bool compact_rle = false;  // counts were a compressed string on input
  double area = 0.0;
  BBox bbox;
  bool iscrowd = false;
  ojson extra = ojson::object();
};

struct CocoCategory {
  std::int64_t id = 0;
  std::string name;
  ojson extra = ojson::object();
};

struct CocoDataset {
  std::vector<CocoImage> images;
  std::vector<CocoAnnotation> annotations;
  std::vector<CocoCategory> categories;
  ojson extra = ojson::object();

  const CocoImage* find_image(std::int64_t id) const;
  const CocoCategory* find_category(std::int64_t id) const;
  std::vector<const CocoAnnotation*> annotations_for(std::int64_t image_id) const;
};

// Throws FormatError (with line/column or field path) on schema problems and
// IntegrityError listing offending ids on cross-reference problems.
CocoDataset parse_dataset(std::string_view json_text, const std::string& source = "<memory>");
CocoDataset load_dataset(const std::filesystem::path& path);
void validate(const CocoDataset& ds);

ojson to_json(const CocoDataset& ds);
// Canonical serialization: two-space indent, trailing newline.
std::string dump_dataset(const CocoDataset& ds);
void save_dataset(const std::filesystem::path& path, const CocoDataset& ds);

struct Detection {
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  BBox bbox;
  double score = 0.0;
  std::optional<SegMask> segmentation;
};

// Detections grouped per image id, input order preserved within an image.
struct DetectionSet {
  std::map<std::int64_t, std::vector<Detection>> per_image;

  std::size_t size() const;
  bool empty() const { return size() == 0; }
};

DetectionSet parse_results(std::string_view json_text, const CocoDataset& dataset,
                           const std::string& source = "<memory>");
DetectionSet load_results(const std::filesystem::path& path, const CocoDataset& dataset);

// SplitMix64 (Steele, Lea & Flood 2014); output sequence is part of the
// split contract so partitions reproduce across implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // Uniform-ish in [0, bound): plain modulo reduction, bias < bound / 2^64.
  std::uint64_t below(std::uint64_t bound) { return next() % bound; }

 private:
  std::uint64_t state_;
};

struct SplitSpec {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
  std::uint64_t seed = 0;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

struct DatasetSplit {
  CocoDataset train;
  CocoDataset val;
  CocoDataset test;
};

// val/test sizes are round(fraction * n); train takes the remainder.
SplitSizes split_sizes(std::size_t n, const SplitSpec& spec);

// Image-level partition after sorting by id and a seeded Fisher-Yates
// shuffle. Each subset keeps ascending image-id order.
DatasetSplit split_dataset(const CocoDataset& ds, const SplitSpec& spec);

// Re-keys image and annotation ids sequentially (a first) and records the
// source label in each image's "origin" field unless one is already set.
// Categories are unified by name.
CocoDataset merge_datasets(const CocoDataset& a, const CocoDataset& b,
                           const std::string& origin_a = "a", const std::string& origin_b = "b");

}  // namespace hicc
