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

#include <cstdlib>
#include <cstring>

#include "doctest.h"
#include "hicc/error.hpp"
#include "hicc/kernels.hpp"
#include "hicc/tileinfer.hpp"
#include "support.hpp"

using namespace hicc;
using testing_support::TempDir;

namespace {

const std::filesystem::path kGolden = std::filesystem::path(HICC_FIXTURE_DIR) / "overlay_golden.png";

PatchConfig tiles(int p = 224, int s = 224) {
  PatchConfig c;
  c.patch_size = p;
  c.stride = s;
  return c;
}

// Replays a fixed list of scores in request order.
class ListScorer final : public Scorer {
 public:
  explicit ListScorer(std::vector<double> v) : v_(std::move(v)) {}
  double score(const std::string&, const Window&) override { return v_.at(i_++); }
  std::string describe() const override { return "list"; }

 private:
  std::vector<double> v_;
  std::size_t i_ = 0;
};

CamTensors tensors(int k, int hc, int wc, std::vector<float> a, std::vector<float> g, Window w) {
  CamTensors t;
  t.k = k;
  t.hc = hc;
  t.wc = wc;
  t.window = w;
  t.activations = std::move(a);
  t.gradients = std::move(g);
  return t;
}

bool is_magenta(const Image& im, int x, int y) {
  const auto* p = im.pixel(x, y);
  return p[0] == 255 && p[1] == 0 && p[2] == 255;
}

}  // namespace

TEST_CASE("constant scorer over a tiled image") {
  ConstantScorer s(0.7);
  const PatchScoreGrid g = score_image("img.png", 448, 448, s, tiles());
  REQUIRE(g.windows.size() == 4);
  for (const auto& w : g.windows) CHECK(w.score == 0.7);
  std::vector<Window> ws;
  for (const auto& w : g.windows) ws.push_back(w.window);
  CHECK(ws == patch_grid(448, 448, tiles()));
  CHECK_THROWS_AS(score_image("small.png", 100, 448, s, tiles()), ValidationError);
}

TEST_CASE("file scorer replays a recording exactly") {
  TempDir dir;
  ListScorer live({0.1, 0.95, 0.5, 0.25, 0.75, 0.0, 1.0, 0.33, 0.66});
  const PatchScoreGrid g = score_image("/data/a/img.png", 448, 448, live, tiles(224, 112));
  testing_support::spit(dir / "rec.jsonl", "{\"type\":\"header\"}\n" + score_recording_jsonl(g));
  FileScorer replay(dir / "rec.jsonl");
  CHECK(replay.size() == 9);
  const PatchScoreGrid again = score_image("/data/a/img.png", 448, 448, replay, tiles(224, 112));
  REQUIRE(again.windows.size() == g.windows.size());
  for (std::size_t i = 0; i < g.windows.size(); ++i) {
    CHECK(again.windows[i].window == g.windows[i].window);
    CHECK(again.windows[i].score == g.windows[i].score);
  }
  CHECK(score_recording_jsonl(again) == score_recording_jsonl(g));
  // Moving the image directory still finds the scores by file name.
  CHECK_NOTHROW(score_image("/elsewhere/img.png", 448, 448, replay, tiles(224, 112)));
  CHECK_THROWS_AS(score_image("other.png", 448, 448, replay, tiles(224, 112)), ProtocolError);
}

TEST_CASE("out-of-range score names the window") {
  ListScorer bad({0.2, 1.2, 0.1, 0.1});
  try {
    score_image("img.png", 448, 448, bad, tiles());
    FAIL("expected ProtocolError");
  } catch (const ProtocolError& e) {
    CHECK(std::string(e.what()).find("(224,0,224,224)") != std::string::npos);
  }
}

TEST_CASE("subprocess scorer speaks the line protocol") {
  SubprocessScorer s("while read line; do echo '{\"score\": 0.25}'; done");
  const PatchScoreGrid g = score_image("img.png", 448, 448, s, tiles());
  REQUIRE(g.windows.size() == 4);
  for (const auto& w : g.windows) CHECK(w.score == 0.25);

  SubprocessScorer garbage("while read line; do echo 'nope'; done");
  CHECK_THROWS_AS(score_image("img.png", 448, 448, garbage, tiles()), ProtocolError);
  SubprocessScorer dies("exit 0");
  CHECK_THROWS_AS(score_image("img.png", 448, 448, dies, tiles()), ProtocolError);
  CHECK(make_scorer("const:0.5")->score("x", {}) == 0.5);
  CHECK_THROWS_AS(make_scorer("const:abc"), ValidationError);
  CHECK_THROWS_AS(make_scorer("gpu:1"), ValidationError);
}

TEST_CASE("overlay leaves the image alone below tau") {
  const Image src = testing_support::pattern_image(448, 448, 9);
  ListScorer s({0.1, 0.5, 0.3, 0.2});
  const PatchScoreGrid g = score_image("x.png", 448, 448, s, tiles());
  CHECK(render_overlay(src, g, 0.5) == src);  // 0.5 does not exceed 0.5
}

TEST_CASE("tau = 0 borders every positive window") {
  const Image src = testing_support::pattern_image(448, 448, 9);
  ConstantScorer s(0.01);
  const PatchScoreGrid g = score_image("x.png", 448, 448, s, tiles());
  const Image out = render_overlay(src, g, 0.0);
  for (const auto& w : g.windows) {
    for (int d = 0; d < kBorderPx; ++d) {
      CHECK(is_magenta(out, w.window.x + d, w.window.y + 100));
      CHECK(is_magenta(out, w.window.x + w.window.w - 1 - d, w.window.y + 100));
      CHECK(is_magenta(out, w.window.x + 100, w.window.y + d));
      CHECK(is_magenta(out, w.window.x + 100, w.window.y + w.window.h - 1 - d));
    }
    CHECK_FALSE(is_magenta(out, w.window.x + 100, w.window.y + 100));
  }
}

TEST_CASE("overlay of one confident window matches the reviewed golden image") {
  const Image src(448, 448, 96);
  ListScorer s({0.2, 0.94, 0.3, 0.1});
  const PatchScoreGrid g = score_image("x.png", 448, 448, s, tiles());
  const Image out = render_overlay(src, g, 0.5);
  if (std::getenv("HICC_UPDATE_GOLDEN")) write_png(kGolden, out);
  REQUIRE(std::filesystem::exists(kGolden));
  CHECK(read_image(kGolden) == out);

  // Only the bordered window changed, and only on border and glyph pixels.
  std::size_t changed = 0;
  for (int y = 0; y < 448; ++y)
    for (int x = 0; x < 448; ++x) {
      const bool diff = std::memcmp(src.pixel(x, y), out.pixel(x, y), 3) != 0;
      changed += diff;
      if (diff) {
        CHECK(x >= 224);
        CHECK(y < 224);
        CHECK(is_magenta(out, x, y));
      }
    }
  CHECK(changed > 4u * 224u * 3u - 36u);
}

TEST_CASE("Grad-CAM worked examples") {
  const Window w{0, 0, 2, 2};
  const Heatmap l = gradcam_lowres(tensors(1, 2, 2, {1, -1, 0, 2}, {1, 1, 1, 1}, w));
  CHECK(l.values == std::vector<float>{1, 0, 0, 2});
  CHECK(gradcam(tensors(1, 2, 2, {1, -1, 0, 2}, {1, 1, 1, 1}, w)).values == std::vector<float>{1, 0, 0, 2});

  const Heatmap zero = gradcam_lowres(tensors(1, 2, 2, {1, -1, 0, 2}, {0, 0, 0, 0}, w));
  for (float v : zero.values) CHECK(v == 0.0f);

  const Heatmap cancel =
      gradcam_lowres(tensors(2, 2, 2, {1, -1, 0, 2, -1, 1, 0, -2}, {1, 1, 1, 1, 1, 1, 1, 1}, w));
  for (float v : cancel.values) CHECK(v == 0.0f);

  CHECK_THROWS_AS(gradcam_lowres(tensors(2, 2, 2, {1, 2, 3, 4}, {1, 1, 1, 1}, w)), ValidationError);
}

TEST_CASE("bilinear upsampling uses half-pixel centres") {
  Heatmap src(2, 1);
  src.values = {0.0f, 4.0f};
  const Heatmap up = upsample_bilinear(src, 4, 1);
  // Source coordinates -0.25, 0.25, 0.75, 1.25 clamp to [0, 1].
  CHECK(up.values == std::vector<float>{0.0f, 1.0f, 3.0f, 4.0f});
  Heatmap one(1, 1);
  one.values = {2.5f};
  for (float v : upsample_bilinear(one, 7, 5).values) CHECK(v == 2.5f);
}

TEST_CASE("composite: max rule, normalization and colormap") {
  const Image src(8, 4, 100);

  SUBCASE("all zero maps to the bottom colour") {
    Heatmap z(4, 4);
    const std::vector<WindowHeatmap> maps{{{0, 0, 4, 4}, z}};
    const CamComposite c = composite_cams(src, maps);
    for (float v : c.combined.values) CHECK(v == 0.0f);
    const auto* p = c.overlay.pixel(0, 0);
    CHECK(p[0] == 50);
    CHECK(p[1] == 50);
    CHECK(p[2] == 178);  // (100 + 255 + 1) >> 1
  }

  SUBCASE("overlapping windows combine by max") {
    Heatmap a(4, 4), b(4, 4), hot(2, 2);
    std::fill(a.values.begin(), a.values.end(), 0.2f);
    std::fill(b.values.begin(), b.values.end(), 0.8f);
    std::fill(hot.values.begin(), hot.values.end(), 1.0f);
    const std::vector<WindowHeatmap> maps{{{0, 0, 4, 4}, a}, {{2, 0, 4, 4}, b}, {{6, 0, 2, 2}, hot}};
    const CamComposite c = composite_cams(src, maps);
    CHECK(c.combined.at(3, 1) == 0.8f);
    CHECK(c.combined.at(0, 0) == 0.2f);
    CHECK(c.combined.at(7, 3) == 0.0f);
    CHECK(c.combined.at(6, 0) == 1.0f);
  }

  SUBCASE("single hot window peaks at red") {
    Heatmap a(4, 4);
    for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] = static_cast<float>(i) * 0.01f;
    const std::vector<WindowHeatmap> maps{{{4, 0, 4, 4}, a}};
    const CamComposite c = composite_cams(src, maps);
    CHECK(kernels::max_value(c.combined.values) == 1.0f);
    CHECK(c.combined.at(7, 3) == 1.0f);
    CHECK(colormap(1.0f) == Rgb{255, 0, 0});
    const auto* p = c.overlay.pixel(7, 3);
    CHECK(p[0] == 178);
    CHECK(p[1] == 50);
    CHECK(p[2] == 50);
  }

  SUBCASE("heatmap must match its window") {
    const std::vector<WindowHeatmap> maps{{{0, 0, 4, 4}, Heatmap(3, 4)}};
    CHECK_THROWS_AS(composite_cams(src, maps), ValidationError);
    const std::vector<WindowHeatmap> outside{{{6, 0, 4, 4}, Heatmap(4, 4)}};
    CHECK_THROWS_AS(composite_cams(src, outside), ValidationError);
  }
}

TEST_CASE("colormap stops") {
  CHECK(colormap(0.0f) == Rgb{0, 0, 255});
  CHECK(colormap(0.25f) == Rgb{0, 255, 255});
  CHECK(colormap(0.5f) == Rgb{0, 255, 0});
  CHECK(colormap(0.75f) == Rgb{255, 255, 0});
  CHECK(colormap(1.0f) == Rgb{255, 0, 0});
  CHECK(colormap(0.125f) == Rgb{0, 128, 255});
}

TEST_CASE(".camt round trip is bit exact") {
  TempDir dir;
  CamTensors t = tensors(2, 3, 4, std::vector<float>(24), std::vector<float>(24), Window{224, 112, 224, 224});
  for (int i = 0; i < 24; ++i) {
    t.activations[static_cast<std::size_t>(i)] = static_cast<float>(i) * 0.37f - 3.0f;
    t.gradients[static_cast<std::size_t>(i)] = 1.0f / static_cast<float>(i + 1);
  }
  const auto bytes = encode_camt(t);
  CHECK(std::memcmp(bytes.data(), "CAMT", 4) == 0);
  const std::string expect_header =
      R"({"k":2,"hc":3,"wc":4,"window":[224,112,224,224],"order":"activations_then_gradients"})";
  CHECK(bytes[4] == expect_header.size());
  CHECK(std::string(bytes.begin() + 8, bytes.begin() + 8 + static_cast<long>(expect_header.size())) == expect_header);
  CHECK(bytes.size() == 8 + expect_header.size() + 2 * 24 * 4);
  const CamTensors back = parse_camt(bytes);
  CHECK(back.activations == t.activations);
  CHECK(back.gradients == t.gradients);
  CHECK(back.window == t.window);
  CHECK(encode_camt(back) == bytes);

  write_camt(dir / "a.camt", t);
  CHECK(encode_camt(read_camt(dir / "a.camt")) == bytes);
}

TEST_CASE(".camt from another writer keeps its header bytes") {
  const std::string header =
      R"({"k": 1, "hc": 1, "wc": 2, "window": [0, 0, 224, 224], "order": "activations_then_gradients"})";
  std::vector<std::uint8_t> bytes{'C', 'A', 'M', 'T', static_cast<std::uint8_t>(header.size()), 0, 0, 0};
  bytes.insert(bytes.end(), header.begin(), header.end());
  for (float f : {1.5f, -2.0f, 0.25f, 0.75f}) {
    std::uint8_t b[4];
    std::memcpy(b, &f, 4);  // little-endian host
    bytes.insert(bytes.end(), b, b + 4);
  }
  const CamTensors t = parse_camt(bytes);
  CHECK(t.activations == std::vector<float>{1.5f, -2.0f});
  CHECK(t.gradients == std::vector<float>{0.25f, 0.75f});
  CHECK(encode_camt(t) == bytes);
}

TEST_CASE(".camt corruption is reported with the file name") {
  TempDir dir;
  testing_support::spit(dir / "bad.camt", "NOPE\x04\x00\x00\x00{}{}");
  try {
    read_camt(dir / "bad.camt");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("bad.camt") != std::string::npos);
  }
  CamTensors t = tensors(1, 1, 1, {1.0f}, {1.0f}, Window{0, 0, 4, 4});
  auto bytes = encode_camt(t);
  bytes.pop_back();
  CHECK_THROWS_AS(parse_camt(bytes, "trunc.camt"), FormatError);
}
