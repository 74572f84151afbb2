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

// Shared fixtures for the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <tuple>
#include <random>
#include <string>
#include <vector>

#include "hicc/cocostore.hpp"
#include "hicc/detmetrics.hpp"
#include "hicc/image.hpp"
#include "hicc/patchgen.hpp"
#include "oracles.hpp"

namespace testing_support {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "hicc-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& p) const { return path_ / p; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void spit(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

// Deterministic textured image, distinct per seed.
inline hicc::Image pattern_image(int w, int h, unsigned seed = 1) {
  hicc::Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto* p = img.pixel(x, y);
      p[0] = static_cast<std::uint8_t>((x * 7 + y * 3 + seed * 11) & 0xFF);
      p[1] = static_cast<std::uint8_t>((x ^ y) + seed);
      p[2] = static_cast<std::uint8_t>((x * y + seed * 5) >> 3);
    }
  return img;
}

// Oracle scene -> library scene (bbox IoU, one image id per index).
inline hicc::EvalScene to_scene(const std::vector<oracle::Img>& imgs) {
  hicc::EvalScene scene;
  std::int64_t gid = 1;
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    hicc::ImageEval ie;
    ie.image_id = static_cast<std::int64_t>(i + 1);
    for (const auto& g : imgs[i].gts) ie.gts.push_back({gid++, g.cat, {g.box.x, g.box.y, g.box.w, g.box.h}, {}});
    for (const auto& d : imgs[i].dets) ie.dets.push_back({d.cat, d.score, {d.box.x, d.box.y, d.box.w, d.box.h}, {}});
    scene.push_back(std::move(ie));
  }
  return scene;
}

// Small random scene: <= 5 gts and <= 6 dets per image, integer boxes on a
// 0..20 grid and scores on a 0.1 grid so ties and exact thresholds occur.
inline std::vector<oracle::Img> random_scene(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_img(1, 4), n_gt(0, 5), n_det(0, 6), coord(0, 16), size(1, 8), cat(1, 2),
      score(0, 10);
  auto box = [&] { return oracle::Box{double(coord(rng)), double(coord(rng)), double(size(rng)), double(size(rng))}; };
  std::vector<oracle::Img> out(static_cast<std::size_t>(n_img(rng)));
  for (auto& im : out) {
    const int g = n_gt(rng), d = n_det(rng);
    for (int i = 0; i < g; ++i) im.gts.push_back({cat(rng), box()});
    for (int i = 0; i < d; ++i) {
      oracle::Box b = box();
      // Half the detections jitter an existing gt so matches are common.
      if (!im.gts.empty() && (rng() & 1)) {
        const auto& gt = im.gts[rng() % im.gts.size()];
        b = gt.box;
        b.x += static_cast<double>(static_cast<int>(rng() % 3) - 1);
        b.w += static_cast<double>(rng() % 2);
        im.dets.push_back({(rng() % 4) ? gt.cat : cat(rng), b, score(rng) / 10.0});
        continue;
      }
      im.dets.push_back({cat(rng), b, score(rng) / 10.0});
    }
  }
  return out;
}

struct SyntheticImage {
  hicc::CocoImage image;
  std::vector<oracle::Ring> rings;            // all polygon rings, any annotation
  std::vector<std::vector<std::uint32_t>> rles;
};

// A COCO dataset of random images carrying random polygon and RLE masks,
// plus the raw geometry for the oracle. Every mask is category 1.
inline hicc::CocoDataset synthetic_dataset(std::mt19937_64& rng, int n_images, int min_side, int max_side,
                                           std::vector<SyntheticImage>& truth) {
  hicc::CocoDataset ds;
  ds.categories.push_back({1, "honeycomb", hicc::ojson::object()});
  std::uniform_int_distribution<int> side(min_side, max_side);
  std::int64_t ann_id = 1;
  for (int i = 0; i < n_images; ++i) {
    SyntheticImage s;
    s.image.id = i + 1;
    s.image.file_name = "img" + std::to_string(i + 1) + ".png";
    s.image.width = side(rng);
    s.image.height = side(rng);
    const double W = s.image.width, H = s.image.height;
    std::uniform_real_distribution<double> ux(0.0, W), uy(0.0, H), rad(2.0, std::min(W, H) / 4);
    const int n_ann = static_cast<int>(rng() % 5);
    for (int a = 0; a < n_ann; ++a) {
      hicc::CocoAnnotation ann;
      ann.id = ann_id++;
      ann.image_id = s.image.id;
      ann.category_id = 1;
      if (rng() % 3 == 0) {
        // RLE: a few random foreground runs in column-major order.
        std::vector<std::uint32_t> counts;
        std::uint64_t total = static_cast<std::uint64_t>(W * H), used = 0;
        while (used < total) {
          std::uint64_t bg = std::min<std::uint64_t>(total - used, rng() % (total / 3 + 1));
          counts.push_back(static_cast<std::uint32_t>(bg));
          used += bg;
          if (used >= total) break;
          std::uint64_t fg = std::min<std::uint64_t>(total - used, 1 + rng() % (static_cast<std::uint64_t>(H) * 6));
          counts.push_back(static_cast<std::uint32_t>(fg));
          used += fg;
        }
        ann.segmentation = hicc::SegMask{hicc::Rle{counts}, s.image.height, s.image.width};
        s.rles.push_back(counts);
      } else {
        hicc::Polygons polys;
        const int n_rings = 1 + static_cast<int>(rng() % 2);
        for (int r = 0; r < n_rings; ++r) {
          const double cx = ux(rng), cy = uy(rng), R = rad(rng);
          const int n = 3 + static_cast<int>(rng() % 6);
          std::vector<double> xy;
          for (int k = 0; k < n; ++k) {
            const double ang = 6.283185307179586 * k / n + (rng() % 100) / 400.0;
            const double rr = R * (0.4 + (rng() % 100) / 160.0);
            xy.push_back(std::clamp(cx + rr * std::cos(ang), 0.0, W));
            xy.push_back(std::clamp(cy + rr * std::sin(ang), 0.0, H));
          }
          polys.push_back(xy);
          s.rings.push_back({xy});
        }
        ann.segmentation = hicc::SegMask{polys, s.image.height, s.image.width};
      }
      // Area/bbox are informational here; keep them valid for validate().
      ann.area = 1.0;
      ann.bbox = {0.0, 0.0, 1.0, 1.0};
      ds.annotations.push_back(std::move(ann));
    }
    ds.images.push_back(s.image);
    truth.push_back(std::move(s));
  }
  return ds;
}

inline oracle::Grid oracle_union(const SyntheticImage& s) {
  oracle::Grid g(s.image.width, s.image.height);
  oracle::paint_rings(g, s.rings);
  for (const auto& c : s.rles) oracle::paint_rle(g, c);
  return g;
}

struct LabelCheck {
  std::size_t images = 0;
  std::size_t windows = 0;
  std::size_t mismatches = 0;
  bool monotone = true;  // positives never appear as theta grows
};

// Generates labels for random synthetic images at each theta and compares
// every record with brute-force pixel counting on the oracle raster.
inline LabelCheck check_patch_labels(std::uint64_t seed, int n_images, hicc::PatchConfig cfg,
                                     const std::vector<double>& thetas) {
  std::mt19937_64 rng(seed);
  std::vector<SyntheticImage> truth;
  const hicc::CocoDataset ds = synthetic_dataset(rng, n_images, 60, 260, truth);
  const std::vector<hicc::SplitInput> in{{hicc::Split::train, ds}};
  hicc::GenerateOptions opts;
  opts.write_patches = false;
  std::map<std::string, oracle::Grid> grids;
  for (const auto& t : truth) grids.emplace(t.image.file_name, oracle_union(t));

  LabelCheck out;
  out.images = truth.size();
  std::map<std::tuple<std::string, int, int>, bool> previous;
  for (double theta : thetas) {
    cfg.area_threshold = theta;
    const hicc::PatchManifest m = hicc::generate(in, cfg, opts);
    for (const auto& r : m.records) {
      ++out.windows;
      const std::size_t area = oracle::count_in(grids.at(r.source_image), r.x, r.y, r.w, r.h);
      const bool label = static_cast<double>(area) >= cfg.threshold_px();
      if (area != r.mask_area_px || label != r.label) ++out.mismatches;
      auto [it, fresh] = previous.try_emplace({r.source_image, r.x, r.y}, r.label);
      if (!fresh) {
        if (r.label && !it->second) out.monotone = false;
        it->second = r.label;
      }
    }
  }
  return out;
}

}  // namespace testing_support
