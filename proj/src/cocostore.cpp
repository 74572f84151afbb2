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

#include "hicc/cocostore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "hicc/error.hpp"

namespace hicc {

const CocoImage* CocoDataset::find_image(std::int64_t id) const {
  for (const auto& im : images)
    if (im.id == id) return &im;
  return nullptr;
}

const CocoCategory* CocoDataset::find_category(std::int64_t id) const {
  for (const auto& c : categories)
    if (c.id == id) return &c;
  return nullptr;
}

std::vector<const CocoAnnotation*> CocoDataset::annotations_for(std::int64_t image_id) const {
  std::vector<const CocoAnnotation*> out;
  for (const auto& a : annotations)
    if (a.image_id == image_id) out.push_back(&a);
  return out;
}

std::size_t DetectionSet::size() const {
  std::size_t n = 0;
  for (const auto& [id, dets] : per_image) n += dets.size();
  return n;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ojson parse_json(std::string_view text, const std::string& source) {
  try {
    return ojson::parse(text.begin(), text.end());
  } catch (const ojson::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw FormatError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": JSON parse error: " + e.what());
  }
}

class FieldReader {
 public:
  explicit FieldReader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw FormatError(source_ + ": " + path + ": " + what);
  }

  const ojson& require(const ojson& obj, const char* key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing field");
    return *it;
  }

  std::int64_t get_int(const ojson& obj, const char* key, const std::string& path) const {
    const auto& v = require(obj, key, path);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::floor(d) == d) return static_cast<std::int64_t>(d);
    }
    fail(path + "." + key, "expected integer");
  }

  double get_number(const ojson& obj, const char* key, const std::string& path) const {
    const auto& v = require(obj, key, path);
    if (!v.is_number()) fail(path + "." + key, "expected number");
    return v.get<double>();
  }

  std::string get_string(const ojson& obj, const char* key, const std::string& path) const {
    const auto& v = require(obj, key, path);
    if (!v.is_string()) fail(path + "." + key, "expected string");
    return v.get<std::string>();
  }

  BBox get_bbox(const ojson& obj, const std::string& path) const {
    const auto& v = require(obj, "bbox", path);
    if (!v.is_array() || v.size() != 4) fail(path + ".bbox", "expected [x, y, w, h]");
    for (const auto& n : v)
      if (!n.is_number()) fail(path + ".bbox", "expected numbers");
    return BBox{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
  }

  // Returns the mask and whether RLE counts were given in compressed form.
  std::pair<SegMask, bool> get_segmentation(const ojson& v, const std::string& path, int height,
                                            int width) const {
    if (v.is_array()) {
      Polygons polys;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& ring = v[i];
        const std::string rp = path + "[" + std::to_string(i) + "]";
        if (!ring.is_array()) fail(rp, "expected coordinate list");
        if (ring.size() % 2 != 0) fail(rp, "odd number of polygon coordinates");
        if (ring.size() < 6) fail(rp, "polygon needs at least 3 vertices");
        std::vector<double> coords;
        coords.reserve(ring.size());
        for (const auto& n : ring) {
          if (!n.is_number()) fail(rp, "expected numbers");
          coords.push_back(n.get<double>());
        }
        polys.push_back(std::move(coords));
      }
      return {SegMask{std::move(polys), height, width}, false};
    }
    if (v.is_object()) {
      const auto& size = require(v, "size", path);
      if (!size.is_array() || size.size() != 2 || !size[0].is_number_integer() ||
          !size[1].is_number_integer())
        fail(path + ".size", "expected [height, width]");
      const int h = size[0].get<int>();
      const int w = size[1].get<int>();
      const auto& counts = require(v, "counts", path);
      Rle rle;
      bool compact = false;
      if (counts.is_string()) {
        try {
          rle = rle_counts_from_string(counts.get<std::string>());
        } catch (const FormatError& e) {
          fail(path + ".counts", e.what());
        }
        compact = true;
      } else if (counts.is_array()) {
        for (const auto& c : counts) {
          if (!c.is_number_unsigned() && !(c.is_number_integer() && c.get<std::int64_t>() >= 0))
            fail(path + ".counts", "expected non-negative integers");
          rle.counts.push_back(c.get<std::uint32_t>());
        }
      } else {
        fail(path + ".counts", "expected array or string");
      }
      std::uint64_t total = 0;
      for (auto c : rle.counts) total += c;
      if (total != static_cast<std::uint64_t>(h) * static_cast<std::uint64_t>(w))
        fail(path + ".counts", "RLE counts sum to " + std::to_string(total) + ", expected " +
                                   std::to_string(static_cast<std::uint64_t>(h) * w));
      return {SegMask{std::move(rle), h, w}, compact};
    }
    fail(path, "expected polygon list or RLE object");
  }

 private:
  std::string source_;
};

ojson extras_of(const ojson& obj, std::initializer_list<const char*> known) {
  ojson extra = ojson::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool is_known = false;
    for (const char* k : known) is_known = is_known || it.key() == k;
    if (!is_known) extra[it.key()] = it.value();
  }
  return extra;
}

ojson segmentation_json(const SegMask& m, bool compact) {
  if (!m.is_rle()) {
    ojson arr = ojson::array();
    for (const auto& ring : m.polygons()) arr.push_back(ring);
    return arr;
  }
  ojson o;
  o["size"] = {m.height, m.width};
  if (compact)
    o["counts"] = rle_counts_to_string(m.rle());
  else
    o["counts"] = m.rle().counts;
  return o;
}

template <typename T>
std::vector<std::int64_t> duplicate_ids(const std::vector<T>& items) {
  std::unordered_set<std::int64_t> seen;
  std::set<std::int64_t> dups;
  for (const auto& it : items)
    if (!seen.insert(it.id).second) dups.insert(it.id);
  return {dups.begin(), dups.end()};
}

std::string join_ids(const std::vector<std::int64_t>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size() && i < 20; ++i) s += (i ? ", " : "") + std::to_string(ids[i]);
  if (ids.size() > 20) s += ", ... (" + std::to_string(ids.size()) + " total)";
  return s;
}

}  // namespace

void validate(const CocoDataset& ds) {
  std::vector<std::string> problems;
  if (auto d = duplicate_ids(ds.images); !d.empty()) problems.push_back("duplicate image ids: " + join_ids(d));
  if (auto d = duplicate_ids(ds.annotations); !d.empty())
    problems.push_back("duplicate annotation ids: " + join_ids(d));
  if (auto d = duplicate_ids(ds.categories); !d.empty())
    problems.push_back("duplicate category ids: " + join_ids(d));

  std::unordered_map<std::int64_t, const CocoImage*> images;
  for (const auto& im : ds.images) images.emplace(im.id, &im);
  std::unordered_set<std::int64_t> cats;
  for (const auto& c : ds.categories) cats.insert(c.id);

  std::vector<std::int64_t> dangling_image, dangling_cat, bad_area, bad_bbox, bad_size;
  constexpr double kEps = 1e-6;
  for (const auto& a : ds.annotations) {
    auto it = images.find(a.image_id);
    if (it == images.end()) {
      dangling_image.push_back(a.id);
      continue;
    }
    if (!cats.contains(a.category_id)) dangling_cat.push_back(a.id);
    if (!(a.area > 0.0)) bad_area.push_back(a.id);
    const auto& im = *it->second;
    const auto& b = a.bbox;
    if (!b.valid() || b.x < -kEps || b.y < -kEps || b.x + b.w > im.width + kEps || b.y + b.h > im.height + kEps)
      bad_bbox.push_back(a.id);
    if (a.segmentation.height != im.height || a.segmentation.width != im.width) bad_size.push_back(a.id);
  }
  if (!dangling_image.empty())
    problems.push_back("annotations referencing missing image_id: " + join_ids(dangling_image));
  if (!dangling_cat.empty())
    problems.push_back("annotations referencing missing category_id: " + join_ids(dangling_cat));
  if (!bad_area.empty()) problems.push_back("annotations with non-positive area: " + join_ids(bad_area));
  if (!bad_bbox.empty()) problems.push_back("annotations with bbox outside image: " + join_ids(bad_bbox));
  if (!bad_size.empty())
    problems.push_back("annotations whose mask size differs from the image: " + join_ids(bad_size));
  if (!problems.empty()) {
    std::string msg = "dataset integrity violated";
    for (const auto& p : problems) msg += "; " + p;
    throw IntegrityError(msg);
  }
}

CocoDataset parse_dataset(std::string_view json_text, const std::string& source) {
  const ojson root = parse_json(json_text, source);
  FieldReader rd(source);
  if (!root.is_object()) rd.fail("$", "expected top-level object");

  CocoDataset ds;
  for (auto it = root.begin(); it != root.end(); ++it) {
    const bool core = it.key() == "images" || it.key() == "annotations" || it.key() == "categories";
    ds.extra[it.key()] = core ? ojson(nullptr) : it.value();
  }

  const auto& images = rd.require(root, "images", "$");
  if (!images.is_array()) rd.fail("images", "expected array");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string p = "images[" + std::to_string(i) + "]";
    const auto& o = images[i];
    CocoImage im;
    im.id = rd.get_int(o, "id", p);
    im.file_name = rd.get_string(o, "file_name", p);
    im.width = static_cast<int>(rd.get_int(o, "width", p));
    im.height = static_cast<int>(rd.get_int(o, "height", p));
    if (im.width <= 0 || im.height <= 0) rd.fail(p, "width and height must be positive");
    im.extra = extras_of(o, {"id", "file_name", "width", "height"});
    ds.images.push_back(std::move(im));
  }

  if (auto it = root.find("categories"); it != root.end()) {
    if (!it->is_array()) rd.fail("categories", "expected array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string p = "categories[" + std::to_string(i) + "]";
      const auto& o = (*it)[i];
      CocoCategory c;
      c.id = rd.get_int(o, "id", p);
      c.name = rd.get_string(o, "name", p);
      c.extra = extras_of(o, {"id", "name"});
      ds.categories.push_back(std::move(c));
    }
  }

  std::unordered_map<std::int64_t, const CocoImage*> by_id;
  for (const auto& im : ds.images) by_id.emplace(im.id, &im);

  if (auto it = root.find("annotations"); it != root.end()) {
    if (!it->is_array()) rd.fail("annotations", "expected array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string p = "annotations[" + std::to_string(i) + "]";
      const auto& o = (*it)[i];
      CocoAnnotation a;
      a.id = rd.get_int(o, "id", p);
      a.image_id = rd.get_int(o, "image_id", p);
      a.category_id = rd.get_int(o, "category_id", p);
      a.area = rd.get_number(o, "area", p);
      a.bbox = rd.get_bbox(o, p);
      if (auto crowd = o.find("iscrowd"); crowd != o.end()) {
        if (!crowd->is_number_integer() && !crowd->is_boolean()) rd.fail(p + ".iscrowd", "expected 0 or 1");
        a.iscrowd = crowd->is_boolean() ? crowd->get<bool>() : crowd->get<int>() != 0;
      }
      const auto img = by_id.find(a.image_id);
      const int h = img != by_id.end() ? img->second->height : 0;
      const int w = img != by_id.end() ? img->second->width : 0;
      auto [mask, compact] = rd.get_segmentation(rd.require(o, "segmentation", p), p + ".segmentation", h, w);
      a.segmentation = std::move(mask);
      a.compact_rle = compact;
      a.extra = extras_of(o, {"id", "image_id", "category_id", "segmentation", "area", "bbox", "iscrowd"});
      ds.annotations.push_back(std::move(a));
    }
  }

  validate(ds);
  return ds;
}

CocoDataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path), path.string());
}

ojson to_json(const CocoDataset& ds) {
  auto images = ojson::array();
  for (const auto& im : ds.images) {
    ojson o;
    o["id"] = im.id;
    o["file_name"] = im.file_name;
    o["width"] = im.width;
    o["height"] = im.height;
    for (auto it = im.extra.begin(); it != im.extra.end(); ++it) o[it.key()] = it.value();
    images.push_back(std::move(o));
  }
  auto annotations = ojson::array();
  for (const auto& a : ds.annotations) {
    ojson o;
    o["id"] = a.id;
    o["image_id"] = a.image_id;
    o["category_id"] = a.category_id;
    o["segmentation"] = segmentation_json(a.segmentation, a.compact_rle);
    o["area"] = a.area;
    o["bbox"] = {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h};
    o["iscrowd"] = a.iscrowd ? 1 : 0;
    for (auto it = a.extra.begin(); it != a.extra.end(); ++it) o[it.key()] = it.value();
    annotations.push_back(std::move(o));
  }
  auto categories = ojson::array();
  for (const auto& c : ds.categories) {
    ojson o;
    o["id"] = c.id;
    o["name"] = c.name;
    for (auto it = c.extra.begin(); it != c.extra.end(); ++it) o[it.key()] = it.value();
    categories.push_back(std::move(o));
  }

  ojson root = ojson::object();
  bool wrote_images = false, wrote_annotations = false, wrote_categories = false;
  for (auto it = ds.extra.begin(); it != ds.extra.end(); ++it) {
    if (it.key() == "images") {
      root["images"] = images;
      wrote_images = true;
    } else if (it.key() == "annotations") {
      root["annotations"] = annotations;
      wrote_annotations = true;
    } else if (it.key() == "categories") {
      root["categories"] = categories;
      wrote_categories = true;
    } else {
      root[it.key()] = it.value();
    }
  }
  if (!wrote_images) root["images"] = std::move(images);
  if (!wrote_annotations) root["annotations"] = std::move(annotations);
  if (!wrote_categories) root["categories"] = std::move(categories);
  return root;
}

std::string dump_dataset(const CocoDataset& ds) { return to_json(ds).dump(2) + "\n"; }

void save_dataset(const std::filesystem::path& path, const CocoDataset& ds) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << dump_dataset(ds);
}

DetectionSet parse_results(std::string_view json_text, const CocoDataset& dataset, const std::string& source) {
  // A zero-byte results file means "no detections", same as [].
  if (json_text.find_first_not_of(" \t\r\n") == std::string_view::npos) return {};
  const ojson root = parse_json(json_text, source);
  FieldReader rd(source);
  if (!root.is_array()) rd.fail("$", "expected array of results");
  DetectionSet out;
  std::vector<std::int64_t> unknown;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const std::string p = "[" + std::to_string(i) + "]";
    const auto& o = root[i];
    Detection d;
    d.image_id = rd.get_int(o, "image_id", p);
    d.category_id = rd.get_int(o, "category_id", p);
    d.score = rd.get_number(o, "score", p);
    if (!(d.score >= 0.0 && d.score <= 1.0)) rd.fail(p + ".score", "score " + std::to_string(d.score) + " outside [0, 1]");
    d.bbox = rd.get_bbox(o, p);
    const CocoImage* img = dataset.find_image(d.image_id);
    if (!img) {
      unknown.push_back(d.image_id);
      continue;
    }
    if (auto seg = o.find("segmentation"); seg != o.end() && !seg->is_null()) {
      auto [mask, compact] = rd.get_segmentation(*seg, p + ".segmentation", img->height, img->width);
      (void)compact;
      if (mask.height != img->height || mask.width != img->width)
        rd.fail(p + ".segmentation.size", "does not match image " + std::to_string(img->id));
      d.segmentation = std::move(mask);
    }
    out.per_image[d.image_id].push_back(std::move(d));
  }
  if (!unknown.empty()) {
    std::sort(unknown.begin(), unknown.end());
    unknown.erase(std::unique(unknown.begin(), unknown.end()), unknown.end());
    throw IntegrityError(source + ": results reference unknown image ids: " + join_ids(unknown));
  }
  return out;
}

DetectionSet load_results(const std::filesystem::path& path, const CocoDataset& dataset) {
  return parse_results(read_file(path), dataset, path.string());
}

SplitSizes split_sizes(std::size_t n, const SplitSpec& spec) {
  for (double f : {spec.train, spec.val, spec.test})
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("split fractions must lie in [0, 1]");
  if (std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9)
    throw ValidationError("split fractions must sum to 1");
  SplitSizes s;
  s.val = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(spec.val * static_cast<double>(n))));
  s.test = std::min<std::size_t>(n - s.val, static_cast<std::size_t>(std::llround(spec.test * static_cast<double>(n))));
  s.train = n - s.val - s.test;
  return s;
}

DatasetSplit split_dataset(const CocoDataset& ds, const SplitSpec& spec) {
  if (ds.images.empty()) throw ValidationError("split_dataset: dataset has no images");
  const SplitSizes sizes = split_sizes(ds.images.size(), spec);

  std::vector<std::size_t> order(ds.images.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto l, auto r) { return ds.images[l].id < ds.images[r].id; });
  SplitMix64 rng(spec.seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  // 0 = train, 1 = val, 2 = test
  std::unordered_map<std::int64_t, int> subset_of;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int subset = k < sizes.train ? 0 : (k < sizes.train + sizes.val ? 1 : 2);
    subset_of[ds.images[order[k]].id] = subset;
  }

  DatasetSplit out;
  CocoDataset* parts[3] = {&out.train, &out.val, &out.test};
  for (auto* part : parts) {
    part->categories = ds.categories;
    part->extra = ds.extra;
  }
  std::vector<const CocoImage*> sorted;
  for (const auto& im : ds.images) sorted.push_back(&im);
  std::sort(sorted.begin(), sorted.end(), [](auto* l, auto* r) { return l->id < r->id; });
  for (const auto* im : sorted) parts[subset_of.at(im->id)]->images.push_back(*im);
  for (const auto& a : ds.annotations) parts[subset_of.at(a.image_id)]->annotations.push_back(a);
  return out;
}

CocoDataset merge_datasets(const CocoDataset& a, const CocoDataset& b, const std::string& origin_a,
                           const std::string& origin_b) {
  CocoDataset out;
  out.extra = a.extra;
  for (auto it = b.extra.begin(); it != b.extra.end(); ++it)
    if (!out.extra.contains(it.key())) out.extra[it.key()] = it.value();

  std::unordered_map<std::string, std::int64_t> cat_by_name;
  std::int64_t next_cat = 1;
  auto add_categories = [&](const CocoDataset& src) {
    std::unordered_map<std::int64_t, std::int64_t> remap;
    for (const auto& c : src.categories) {
      auto it = cat_by_name.find(c.name);
      if (it == cat_by_name.end()) {
        CocoCategory nc = c;
        nc.id = next_cat++;
        it = cat_by_name.emplace(c.name, nc.id).first;
        out.categories.push_back(std::move(nc));
      }
      remap[c.id] = it->second;
    }
    return remap;
  };

  std::int64_t next_image = 1, next_ann = 1;
  auto append = [&](const CocoDataset& src, const std::string& origin) {
    const auto cat_remap = add_categories(src);
    std::unordered_map<std::int64_t, std::int64_t> image_remap;
    for (const auto& im : src.images) {
      CocoImage ni = im;
      ni.id = next_image++;
      if (!ni.extra.contains("origin")) ni.extra["origin"] = origin;
      image_remap[im.id] = ni.id;
      out.images.push_back(std::move(ni));
    }
    for (const auto& an : src.annotations) {
      CocoAnnotation na = an;
      na.id = next_ann++;
      na.image_id = image_remap.at(an.image_id);
      na.category_id = cat_remap.contains(an.category_id) ? cat_remap.at(an.category_id) : an.category_id;
      out.annotations.push_back(std::move(na));
    }
  };
  append(a, origin_a);
  append(b, origin_b);
  return out;
}

}  // namespace hicc
