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

#include "hicc/patchgen.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hicc/error.hpp"
#include "hicc/image.hpp"

namespace hicc {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val" || name == "validation") return Split::val;
  if (name == "test") return Split::test;
  throw ValidationError("unknown split '" + std::string(name) + "' (expected train, val or test)");
}

void PatchConfig::validate() const {
  if (patch_size <= 0) throw ValidationError("patch size must be positive");
  if (stride <= 0 || stride > patch_size) throw ValidationError("stride must satisfy 0 < stride <= patch size");
  if (!(area_threshold >= 0.0 && area_threshold <= 1.0))
    throw ValidationError("area threshold must lie in [0, 1]");
  if (origin_tag.empty()) throw ValidationError("origin tag must not be empty");
}

ojson PatchConfig::to_json() const {
  ojson j;
  j["patch_size"] = patch_size;
  j["stride"] = stride;
  j["area_threshold"] = area_threshold;
  j["edge_anchored"] = edge_anchored;
  j["origin"] = origin_tag;
  j["category"] = category;
  return j;
}

PatchConfig PatchConfig::from_json(const ojson& j) {
  PatchConfig c;
  c.patch_size = j.at("patch_size").get<int>();
  c.stride = j.at("stride").get<int>();
  c.area_threshold = j.at("area_threshold").get<double>();
  c.edge_anchored = j.value("edge_anchored", false);
  c.origin_tag = j.value("origin", std::string("hicis"));
  c.category = j.value("category", std::string());
  return c;
}

std::vector<int> axis_positions(int length, int patch, int stride, bool anchored) {
  std::vector<int> out;
  if (length < patch || patch <= 0 || stride <= 0) return out;
  for (int x = 0; x + patch <= length; x += stride) out.push_back(x);
  if (anchored && out.back() != length - patch) out.push_back(length - patch);
  return out;
}

std::vector<Window> patch_grid(int height, int width, const PatchConfig& cfg) {
  cfg.validate();
  const auto xs = axis_positions(width, cfg.patch_size, cfg.stride, cfg.edge_anchored);
  const auto ys = axis_positions(height, cfg.patch_size, cfg.stride, cfg.edge_anchored);
  std::vector<Window> out;
  out.reserve(xs.size() * ys.size());
  for (int y : ys)
    for (int x : xs) out.push_back(Window{x, y, cfg.patch_size, cfg.patch_size});
  return out;
}

BitGrid union_mask(std::span<const SegMask> masks, int height, int width) {
  BitGrid grid(width, height);
  for (const auto& m : masks) grid |= rasterize(m, height, width);
  return grid;
}

PatchLabel label_window(const Window& window, const BitGrid& union_grid, const PatchConfig& cfg) {
  PatchLabel out;
  out.mask_area_px = mask_area_in_window(union_grid, window.box());
  out.label = static_cast<double>(out.mask_area_px) >= cfg.threshold_px();
  return out;
}

PatchLabel label_patch(const Window& window, std::span<const SegMask> masks, int height, int width,
                       const PatchConfig& cfg) {
  if (masks.empty()) return PatchLabel{false, 0};
  return label_window(window, union_mask(masks, height, width), cfg);
}

std::string dataset_name(std::string_view origin, int stride, int patch) {
  return "HiCC/" + std::string(origin) + "-s" + std::to_string(stride) + "-p" + std::to_string(patch);
}

std::vector<SegMask> defect_masks(const CocoDataset& ds, const CocoImage& image, const PatchConfig& cfg) {
  std::vector<SegMask> masks;
  for (const auto* a : ds.annotations_for(image.id)) {
    if (!cfg.category.empty()) {
      const auto* cat = ds.find_category(a->category_id);
      if (!cat || cat->name != cfg.category) continue;
    }
    masks.push_back(a->segmentation);
  }
  return masks;
}

namespace {

std::string origin_of(const CocoImage& im, const PatchConfig& cfg) {
  if (auto it = im.extra.find("origin"); it != im.extra.end() && it->is_string()) return it->get<std::string>();
  return cfg.origin_tag;
}

struct ImageJob {
  Split split;
  const CocoDataset* dataset;
  const CocoImage* image;
};

struct ImageResult {
  std::vector<PatchRecord> records;
  std::optional<SkippedImage> skipped;
};

std::vector<ImageJob> collect_jobs(std::span<const SplitInput> inputs) {
  std::vector<ImageJob> jobs;
  for (const auto& in : inputs)
    for (const auto& im : in.dataset.images) jobs.push_back(ImageJob{in.split, &in.dataset, &im});
  std::stable_sort(jobs.begin(), jobs.end(),
                   [](const ImageJob& l, const ImageJob& r) { return l.image->file_name < r.image->file_name; });
  return jobs;
}

ImageResult process_image(const ImageJob& job, const PatchConfig& cfg, const GenerateOptions& opts,
                          const ojson& png_header) {
  ImageResult res;
  const auto& im = *job.image;
  Image pixels;
  if (opts.write_patches) {
    try {
      pixels = read_image(opts.image_dir / im.file_name);
    } catch (const std::exception& e) {
      res.skipped = SkippedImage{im.file_name, job.split, e.what()};
      return res;
    }
    if (pixels.width != im.width || pixels.height != im.height) {
      res.skipped = SkippedImage{im.file_name, job.split,
                                 "decoded size " + std::to_string(pixels.width) + "x" + std::to_string(pixels.height) +
                                     " differs from annotation size " + std::to_string(im.width) + "x" +
                                     std::to_string(im.height)};
      return res;
    }
  }

  const auto masks = defect_masks(*job.dataset, im, cfg);
  const BitGrid grid = union_mask(masks, im.height, im.width);
  const std::string origin = origin_of(im, cfg);
  const std::string stem = std::filesystem::path(im.file_name).stem().string();
  const auto split_dir = opts.out_dir / "patches" / std::string(split_name(job.split));
  PngText text;
  if (opts.write_patches) text.emplace_back("hicc", png_header.dump());

  for (const auto& w : patch_grid(im.height, im.width, cfg)) {
    const PatchLabel lab = label_window(w, grid, cfg);
    PatchRecord rec;
    rec.patch_id = origin + "_" + stem + "_" + std::to_string(w.x) + "_" + std::to_string(w.y);
    rec.source_image = im.file_name;
    rec.x = w.x;
    rec.y = w.y;
    rec.w = w.w;
    rec.h = w.h;
    rec.label = lab.label;
    rec.mask_area_px = lab.mask_area_px;
    rec.split = job.split;
    rec.origin = origin;
    if (opts.write_patches) write_png(split_dir / (rec.patch_id + ".png"), crop(pixels, w.x, w.y, w.w, w.h), text);
    res.records.push_back(std::move(rec));
  }
  return res;
}

ojson record_json(const PatchRecord& r) {
  ojson j;
  j["patch_id"] = r.patch_id;
  j["source_image"] = r.source_image;
  j["x"] = r.x;
  j["y"] = r.y;
  j["w"] = r.w;
  j["h"] = r.h;
  j["label"] = r.label;
  j["mask_area_px"] = r.mask_area_px;
  j["split"] = split_name(r.split);
  j["origin"] = r.origin;
  return j;
}

}  // namespace

PatchManifest generate(std::span<const SplitInput> inputs, const PatchConfig& cfg, const GenerateOptions& opts) {
  cfg.validate();
  PatchManifest manifest;
  manifest.config = cfg;
  manifest.dataset_name = dataset_name(cfg.origin_tag, cfg.stride, cfg.patch_size);
  manifest.seed = opts.seed;

  if (opts.write_patches)
    for (Split s : {Split::train, Split::val, Split::test})
      std::filesystem::create_directories(opts.out_dir / "patches" / std::string(split_name(s)));

  const auto jobs = collect_jobs(inputs);
  const ojson png_header = run_header("patchgen", cfg.to_json(), opts.seed);
  std::vector<ImageResult> results(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) { results[i] = process_image(jobs[i], cfg, opts, png_header); });

  for (auto& r : results) {
    if (r.skipped) manifest.skipped.push_back(std::move(*r.skipped));
    for (auto& rec : r.records) manifest.records.push_back(std::move(rec));
  }
  std::stable_sort(manifest.records.begin(), manifest.records.end(), [](const PatchRecord& l, const PatchRecord& r) {
    if (l.source_image != r.source_image) return l.source_image < r.source_image;
    if (l.y != r.y) return l.y < r.y;
    return l.x < r.x;
  });
  return manifest;
}

std::string manifest_jsonl(const PatchManifest& manifest) {
  ojson header = run_header("patchgen", manifest.config.to_json(), manifest.seed);
  header["type"] = "header";
  header["dataset_name"] = manifest.dataset_name;
  header["record_count"] = manifest.records.size();
  auto skipped = ojson::array();
  for (const auto& s : manifest.skipped)
    skipped.push_back(ojson{{"file_name", s.file_name}, {"split", split_name(s.split)}, {"reason", s.reason}});
  header["skipped"] = std::move(skipped);

  std::string out = header.dump() + "\n";
  for (const auto& r : manifest.records) out += record_json(r).dump() + "\n";
  return out;
}

void write_manifest(const std::filesystem::path& path, const PatchManifest& manifest) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << manifest_jsonl(manifest);
}

PatchManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  PatchManifest m;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const ojson::parse_error& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      if (!have_header) {
        if (j.value("type", std::string()) != "header")
          throw FormatError(path.string() + ":1: first line must be the manifest header");
        m.config = PatchConfig::from_json(j.at("config"));
        m.dataset_name = j.value("dataset_name", std::string());
        m.seed = j.value("seed", std::uint64_t{0});
        for (const auto& s : j.value("skipped", ojson::array()))
          m.skipped.push_back(SkippedImage{s.at("file_name").get<std::string>(),
                                           parse_split(s.at("split").get<std::string>()),
                                           s.value("reason", std::string())});
        have_header = true;
        continue;
      }
      PatchRecord r;
      r.patch_id = j.at("patch_id").get<std::string>();
      r.source_image = j.at("source_image").get<std::string>();
      r.x = j.at("x").get<int>();
      r.y = j.at("y").get<int>();
      r.w = j.at("w").get<int>();
      r.h = j.at("h").get<int>();
      r.label = j.at("label").get<bool>();
      r.mask_area_px = j.at("mask_area_px").get<std::size_t>();
      r.split = parse_split(j.at("split").get<std::string>());
      r.origin = j.at("origin").get<std::string>();
      m.records.push_back(std::move(r));
    } catch (const ojson::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw FormatError(path.string() + ": empty manifest");
  return m;
}

SplitCounts PatchStats::total() const {
  return SplitCounts{train.positive + val.positive + test.positive, train.negative + val.negative + test.negative};
}

const SplitCounts& PatchStats::of(Split s) const {
  return s == Split::train ? train : (s == Split::val ? val : test);
}

SplitCounts& PatchStats::of(Split s) { return s == Split::train ? train : (s == Split::val ? val : test); }

PatchStats stats(const PatchManifest& manifest) {
  PatchStats st;
  for (const auto& r : manifest.records) {
    auto& c = st.of(r.split);
    (r.label ? c.positive : c.negative) += 1;
  }
  return st;
}

std::string format_stats_table(std::span<const std::pair<std::string, PatchManifest>> rows) {
  std::ostringstream os;
  auto line = [&](const std::string& origin, const std::string& name, const std::vector<std::string>& cells) {
    os << std::left << std::setw(14) << origin << std::setw(28) << name;
    for (const auto& c : cells) os << std::right << std::setw(9) << c;
    os << "\n";
  };
  line("", "", {"train", "", "val", "", "test", ""});
  line("origin", "dataset name", {"true", "false", "true", "false", "true", "false"});
  for (const auto& [origin, m] : rows) {
    const PatchStats st = stats(m);
    std::vector<std::string> cells;
    for (Split s : {Split::train, Split::val, Split::test}) {
      cells.push_back(std::to_string(st.of(s).positive));
      cells.push_back(std::to_string(st.of(s).negative));
    }
    line(origin, m.dataset_name, cells);
  }
  return os.str();
}

SweepReport threshold_sweep(std::span<const SplitInput> inputs, const PatchConfig& cfg,
                            std::span<const double> thresholds, const std::optional<PatchStats>& target) {
  cfg.validate();
  for (double t : thresholds)
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("sweep thresholds must lie in [0, 1]");

  const auto jobs = collect_jobs(inputs);
  // Per image: split and every window's covered area.
  std::vector<std::vector<std::size_t>> areas(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const auto& im = *jobs[i].image;
    const auto masks = defect_masks(*jobs[i].dataset, im, cfg);
    const BitGrid grid = union_mask(masks, im.height, im.width);
    for (const auto& w : patch_grid(im.height, im.width, cfg)) areas[i].push_back(mask_area_in_window(grid, w.box()));
  });

  SweepReport report;
  for (double t : thresholds) {
    PatchConfig c = cfg;
    c.area_threshold = t;
    SweepRow row;
    row.area_threshold = t;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      auto& counts = row.stats.of(jobs[i].split);
      for (std::size_t a : areas[i]) (static_cast<double>(a) >= c.threshold_px() ? counts.positive : counts.negative) += 1;
    }
    if (target) {
      std::size_t d = 0;
      for (Split s : {Split::train, Split::val, Split::test}) {
        const auto& got = row.stats.of(s);
        const auto& want = target->of(s);
        d += got.positive > want.positive ? got.positive - want.positive : want.positive - got.positive;
        d += got.negative > want.negative ? got.negative - want.negative : want.negative - got.negative;
      }
      row.distance = d;
      if (!report.best || d < *report.rows[*report.best].distance) report.best = report.rows.size();
    }
    report.rows.push_back(row);
  }
  return report;
}

ojson sweep_to_json(const SweepReport& report, const PatchConfig& cfg) {
  ojson j;
  j["header"] = run_header("patchgen-sweep", cfg.to_json());
  auto rows = ojson::array();
  for (const auto& r : report.rows) {
    ojson o;
    o["area_threshold"] = r.area_threshold;
    for (Split s : {Split::train, Split::val, Split::test}) {
      o[std::string(split_name(s))] = {{"true", r.stats.of(s).positive}, {"false", r.stats.of(s).negative}};
    }
    if (r.distance) o["l1_distance"] = *r.distance;
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  if (report.best) j["best_area_threshold"] = report.rows[*report.best].area_threshold;
  return j;
}

}  // namespace hicc
