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

#include <map>
#include <random>

#include "doctest.h"
#include "hicc/error.hpp"
#include "hicc/patchgen.hpp"
#include "support.hpp"

using namespace hicc;
using testing_support::TempDir;

namespace {

PatchConfig cfg_of(int p, int s, bool anchored = false, double theta = 0.01) {
  PatchConfig c;
  c.patch_size = p;
  c.stride = s;
  c.edge_anchored = anchored;
  c.area_threshold = theta;
  return c;
}

std::map<std::pair<int, int>, int> multiplicity(const std::vector<Window>& ws) {
  std::map<std::pair<int, int>, int> m;
  for (const auto& w : ws)
    for (int y = w.y; y < w.y + w.h; ++y)
      for (int x = w.x; x < w.x + w.w; ++x) ++m[{x, y}];
  return m;
}

CocoDataset single_image(int w, int h, std::vector<SegMask> masks, const std::string& name = "scene.png") {
  CocoDataset ds;
  ds.categories.push_back({1, "honeycomb", ojson::object()});
  ds.images.push_back({1, name, w, h, ojson::object()});
  std::int64_t id = 1;
  for (auto& m : masks) {
    CocoAnnotation a;
    a.id = id++;
    a.image_id = 1;
    a.category_id = 1;
    a.segmentation = std::move(m);
    a.area = 1;
    a.bbox = {0, 0, 1, 1};
    ds.annotations.push_back(std::move(a));
  }
  return ds;
}

SegMask rect(double x, double y, double w, double h, int iw, int ih) {
  return SegMask{Polygons{{x, y, x + w, y, x + w, y + h, x, y + h}}, ih, iw};
}

}  // namespace

TEST_CASE("window grid sizes and coverage") {
  const auto half = patch_grid(448, 448, cfg_of(224, 112));
  CHECK(half.size() == 9);
  int max_mult = 0;
  for (const auto& [px, m] : multiplicity(half)) max_mult = std::max(max_mult, m);
  CHECK(max_mult == 4);

  const auto tiles = patch_grid(448, 448, cfg_of(224, 224));
  CHECK(tiles.size() == 4);
  const auto mult = multiplicity(tiles);
  CHECK(mult.size() == 448u * 448u);
  for (const auto& [px, m] : mult) REQUIRE(m == 1);
}

TEST_CASE("row-major order and edge anchoring") {
  const auto ws = patch_grid(448, 500, cfg_of(224, 224, true));
  std::vector<int> xs;
  for (const auto& w : ws)
    if (w.y == 0) xs.push_back(w.x);
  CHECK(xs == std::vector<int>{0, 224, 276});
  CHECK(ws.size() == 6);
  for (std::size_t i = 1; i < ws.size(); ++i)
    CHECK((ws[i - 1].y < ws[i].y || (ws[i - 1].y == ws[i].y && ws[i - 1].x < ws[i].x)));
  CHECK(axis_positions(500, 224, 224, false) == std::vector<int>{0, 224});
  CHECK(axis_positions(200, 224, 224, true).empty());
}

TEST_CASE("invalid configs") {
  CHECK_THROWS_AS(cfg_of(0, 1).validate(), ValidationError);
  CHECK_THROWS_AS(cfg_of(224, 0).validate(), ValidationError);
  CHECK_THROWS_AS(cfg_of(224, 112, false, 1.5).validate(), ValidationError);
}

TEST_CASE("label examples") {
  const PatchConfig c = cfg_of(224, 224);
  const Window w{0, 0, 224, 224};
  CHECK(label_patch(w, {}, 448, 448, c) == PatchLabel{false, 0});
  const std::vector<SegMask> big{rect(0, 0, 100, 224, 448, 448)};
  CHECK(label_patch(w, big, 448, 448, c) == PatchLabel{true, 22400});
  const std::vector<SegMask> small{rect(10, 10, 10, 10, 448, 448)};
  CHECK(label_patch(w, small, 448, 448, c) == PatchLabel{false, 100});
  // Overlapping masks are unioned, not summed.
  const std::vector<SegMask> twice{rect(10, 10, 10, 10, 448, 448), rect(10, 10, 10, 10, 448, 448)};
  CHECK(label_patch(w, twice, 448, 448, c).mask_area_px == 100);
}

TEST_CASE("generate on a centred mask matches hand enumeration") {
  // 60x60 square centred on the 448x448 image: 30x30 in each quadrant.
  const CocoDataset ds = single_image(448, 448, {rect(194, 194, 60, 60, 448, 448)});
  const std::vector<SplitInput> in{{Split::test, ds}};
  GenerateOptions opts;
  opts.write_patches = false;
  const PatchManifest m = generate(in, cfg_of(224, 224), opts);
  REQUIRE(m.records.size() == 4);
  for (const auto& r : m.records) {
    CHECK(r.mask_area_px == 900);
    CHECK(r.label);  // 900 >= 0.01 * 224^2 = 501.76
    CHECK(r.split == Split::test);
  }
  CHECK(m.records[0].patch_id == "hicis_scene_0_0");
  CHECK(m.records[1].patch_id == "hicis_scene_224_0");
  const PatchManifest strict = generate(in, cfg_of(224, 224, false, 0.02), opts);
  for (const auto& r : strict.records) CHECK_FALSE(r.label);
}

TEST_CASE("images smaller than the patch give no records") {
  const CocoDataset ds = single_image(200, 300, {});
  const std::vector<SplitInput> in{{Split::train, ds}};
  GenerateOptions opts;
  opts.write_patches = false;
  CHECK(generate(in, cfg_of(224, 112), opts).records.empty());
  CHECK(generate(in, cfg_of(224, 112, true), opts).records.empty());
}

TEST_CASE("patch files are lossless crops and the manifest is deterministic") {
  TempDir dir;
  const Image src = testing_support::pattern_image(300, 260, 3);
  std::filesystem::create_directories(dir / "images");
  write_png(dir / "images/scene.png", src);
  const CocoDataset ds = single_image(300, 260, {rect(20, 20, 80, 90, 300, 260)});
  const std::vector<SplitInput> in{{Split::train, ds}};
  GenerateOptions opts;
  opts.image_dir = dir / "images";
  opts.out_dir = dir / "out";
  const PatchConfig cfg = cfg_of(128, 64, true);
  const PatchManifest m = generate(in, cfg, opts);
  REQUIRE_FALSE(m.records.empty());
  for (const auto& r : m.records) {
    const Image patch = read_image(opts.out_dir / "patches/train" / (r.patch_id + ".png"));
    CHECK(patch == crop(src, r.x, r.y, r.w, r.h));
  }
  write_manifest(dir / "a.jsonl", m);
  const PatchManifest again = generate(in, cfg, opts);
  write_manifest(dir / "b.jsonl", again);
  CHECK(testing_support::slurp(dir / "a.jsonl") == testing_support::slurp(dir / "b.jsonl"));

  const PatchManifest back = read_manifest(dir / "a.jsonl");
  CHECK(back.records == m.records);
  CHECK(back.dataset_name == "HiCC/hicis-s64-p128");
  CHECK(back.config.to_json() == cfg.to_json());
}

TEST_CASE("unreadable images are skipped and reported") {
  TempDir dir;
  const CocoDataset ds = single_image(300, 260, {}, "missing.png");
  const std::vector<SplitInput> in{{Split::val, ds}};
  GenerateOptions opts;
  opts.image_dir = dir.path();
  opts.out_dir = dir / "out";
  const PatchManifest m = generate(in, cfg_of(128, 128), opts);
  CHECK(m.records.empty());
  REQUIRE(m.skipped.size() == 1);
  CHECK(m.skipped[0].file_name == "missing.png");
}

TEST_CASE("stats counting and table layout") {
  PatchManifest m;
  m.dataset_name = "HiCC/metis-s224-p224";
  for (int i = 0; i < 9; ++i) {
    PatchRecord r;
    r.patch_id = "p" + std::to_string(i);
    r.label = i < 2;
    r.split = Split::train;
    m.records.push_back(r);
  }
  const PatchStats st = stats(m);
  CHECK(st.train == SplitCounts{2, 7});
  CHECK(st.val == SplitCounts{0, 0});
  CHECK(st.test == SplitCounts{0, 0});
  CHECK(stats(PatchManifest{}) == PatchStats{});
  const std::vector<std::pair<std::string, PatchManifest>> rows{{"metis", m}};
  const std::string table = format_stats_table(rows);
  CHECK(table.find("HiCC/metis-s224-p224") != std::string::npos);
  CHECK(table.find("true") != std::string::npos);
}

TEST_CASE("dataset names") {
  CHECK(dataset_name("metis", 112, 224) == "HiCC/metis-s112-p224");
  CHECK(dataset_name("web", 224, 224) == "HiCC/web-s224-p224");
  CHECK(dataset_name("x", 1, 1) == "HiCC/x-s1-p1");
}

TEST_CASE("threshold sweep is monotone and picks the closest row") {
  std::mt19937_64 rng(5);
  std::vector<testing_support::SyntheticImage> truth;
  const CocoDataset ds = testing_support::synthetic_dataset(rng, 12, 200, 400, truth);
  const std::vector<SplitInput> in{{Split::train, ds}};
  const std::vector<double> thetas{0.0025, 0.005, 0.01, 0.02, 0.05};
  GenerateOptions opts;
  opts.write_patches = false;
  PatchConfig cfg = cfg_of(96, 48);
  cfg.area_threshold = 0.01;
  const PatchStats at_one_percent = stats(generate(in, cfg, opts));
  const SweepReport rep = threshold_sweep(in, cfg, thetas, at_one_percent);
  REQUIRE(rep.rows.size() == thetas.size());
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    CHECK(rep.rows[i].stats.train.positive <= rep.rows[i - 1].stats.train.positive);
  REQUIRE(rep.best.has_value());
  CHECK(rep.rows[*rep.best].distance == std::optional<std::size_t>{0});
  CHECK(rep.rows[2].distance == std::optional<std::size_t>{0});
  CHECK(sweep_to_json(rep, cfg).at("rows").size() == thetas.size());
}

TEST_CASE("generated labels agree with brute-force pixel counting") {
  const auto r = testing_support::check_patch_labels(17, 50, cfg_of(48, 24, true), {0.0025, 0.01, 0.05, 0.2});
  CHECK(r.images == 50);
  CHECK(r.windows > 1000);
  CHECK(r.mismatches == 0);
  CHECK(r.monotone);
}
