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

#include "hicc/detmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "hicc/error.hpp"
#include "hicc/kernels.hpp"

namespace hicc {

std::string_view iou_kind_name(IouKind k) { return k == IouKind::bbox ? "bbox" : "mask"; }

IouKind parse_iou_kind(std::string_view s) {
  if (s == "bbox") return IouKind::bbox;
  if (s == "mask" || s == "segm") return IouKind::mask;
  throw ValidationError("unknown IoU kind '" + std::string(s) + "' (expected bbox or mask)");
}

CroppedMask CroppedMask::from_grid(const BitGrid& grid) {
  CroppedMask m;
  const BBox b = bbox_of(grid);
  if (!b.valid()) return m;
  m.x0 = static_cast<int>(b.x);
  m.y0 = static_cast<int>(b.y);
  m.bits = BitGrid(static_cast<int>(b.w), static_cast<int>(b.h));
  for (int y = 0; y < m.bits.height(); ++y) {
    const auto src = grid.row(m.y0 + y).subspan(static_cast<std::size_t>(m.x0), static_cast<std::size_t>(m.bits.width()));
    std::copy(src.begin(), src.end(), m.bits.row(y).begin());
  }
  m.area = m.bits.count();
  return m;
}

double iou_cropped(const CroppedMask& a, const CroppedMask& b) {
  const std::size_t uni_upper = a.area + b.area;
  if (uni_upper == 0) return 0.0;
  const int x0 = std::max(a.x0, b.x0);
  const int x1 = std::min(a.x0 + a.bits.width(), b.x0 + b.bits.width());
  const int y0 = std::max(a.y0, b.y0);
  const int y1 = std::min(a.y0 + a.bits.height(), b.y0 + b.bits.height());
  std::size_t inter = 0;
  if (x1 > x0 && y1 > y0) {
    const auto len = static_cast<std::size_t>(x1 - x0);
    for (int y = y0; y < y1; ++y) {
      const auto ra = a.bits.row(y - a.y0).subspan(static_cast<std::size_t>(x0 - a.x0), len);
      const auto rb = b.bits.row(y - b.y0).subspan(static_cast<std::size_t>(x0 - b.x0), len);
      inter += kernels::overlap_counts(ra, rb).intersection;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(uni_upper - inter);
}

EvalScene make_scene(const CocoDataset& gt, const DetectionSet& dets, IouKind kind) {
  std::vector<const CocoImage*> images;
  for (const auto& im : gt.images) images.push_back(&im);
  std::sort(images.begin(), images.end(), [](auto* l, auto* r) { return l->id < r->id; });

  EvalScene scene(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    const CocoImage& im = *images[i];
    ImageEval& ev = scene[i];
    ev.image_id = im.id;
    for (const auto* a : gt.annotations_for(im.id)) {
      EvalInstance inst{a->id, a->category_id, a->bbox, std::nullopt};
      if (kind == IouKind::mask)
        inst.mask = CroppedMask::from_grid(rasterize(a->segmentation, im.height, im.width));
      ev.gts.push_back(std::move(inst));
    }
    if (auto it = dets.per_image.find(im.id); it != dets.per_image.end()) {
      for (const auto& d : it->second) {
        EvalDetection ed{d.category_id, d.score, d.bbox, std::nullopt};
        if (kind == IouKind::mask) {
          if (!d.segmentation)
            throw ValidationError("mask evaluation requested but a detection on image " + std::to_string(im.id) +
                                  " has no segmentation");
          ed.mask = CroppedMask::from_grid(rasterize(*d.segmentation, im.height, im.width));
        }
        ev.dets.push_back(std::move(ed));
      }
    }
  });
  return scene;
}

std::size_t MatchResult::true_positives() const {
  std::size_t n = 0;
  for (const auto& d : detections) n += d.matched_gt.has_value();
  return n;
}

namespace {

struct PreparedImage {
  const ImageEval* image = nullptr;
  std::vector<std::size_t> order;  // det indices by descending score, stable
  std::vector<double> iou;         // order.size() x gts.size(), row per ranked det
};

struct Prepared {
  std::vector<PreparedImage> images;
  std::size_t gt_count = 0;
  IouKind kind = IouKind::bbox;
};

double pair_iou(const EvalDetection& d, const EvalInstance& g, IouKind kind) {
  if (kind == IouKind::bbox) return iou_bbox(d.bbox, g.bbox);
  if (!d.mask || !g.mask) throw ValidationError("mask IoU requested but masks are absent");
  return iou_cropped(*d.mask, *g.mask);
}

Prepared prepare(const EvalScene& scene, IouKind kind) {
  Prepared p;
  p.kind = kind;
  p.images.resize(scene.size());
  for (std::size_t i = 0; i < scene.size(); ++i) {
    auto& pi = p.images[i];
    const auto& im = scene[i];
    pi.image = &im;
    p.gt_count += im.gts.size();
    pi.order.resize(im.dets.size());
    std::iota(pi.order.begin(), pi.order.end(), 0);
    std::stable_sort(pi.order.begin(), pi.order.end(),
                     [&](std::size_t l, std::size_t r) { return im.dets[l].score > im.dets[r].score; });
    const std::size_t ng = im.gts.size();
    pi.iou.assign(pi.order.size() * ng, 0.0);
    for (std::size_t r = 0; r < pi.order.size(); ++r) {
      const auto& d = im.dets[pi.order[r]];
      for (std::size_t g = 0; g < ng; ++g)
        if (d.category_id == im.gts[g].category_id) pi.iou[r * ng + g] = pair_iou(d, im.gts[g], kind);
    }
  }
  return p;
}

MatchResult match_prepared(const Prepared& p, double threshold, const MatchOptions& opts) {
  MatchResult out;
  out.iou_threshold = threshold;
  out.kind = p.kind;
  out.gt_count = p.gt_count;
  for (const auto& pi : p.images) {
    const auto& im = *pi.image;
    const std::size_t ng = im.gts.size();
    std::vector<bool> taken(ng, false);
    std::size_t used = 0;
    for (std::size_t r = 0; r < pi.order.size(); ++r) {
      const auto& d = im.dets[pi.order[r]];
      if (d.score < opts.min_score) continue;
      if (used >= opts.max_dets_per_image) break;
      ++used;
      std::optional<std::size_t> best;
      double best_iou = 0.0;
      for (std::size_t g = 0; g < ng; ++g) {
        if (taken[g] || im.gts[g].category_id != d.category_id) continue;
        const double v = pi.iou[r * ng + g];
        if (v >= threshold && (!best || v > best_iou)) {
          best = g;
          best_iou = v;
        }
      }
      DetMatch m;
      m.image_id = im.image_id;
      m.det_index = pi.order[r];
      m.score = d.score;
      if (best) {
        taken[*best] = true;
        m.matched_gt = im.gts[*best].id;
        m.iou = best_iou;
      }
      out.detections.push_back(m);
    }
    for (std::size_t g = 0; g < ng; ++g) out.gt_matched.emplace_back(im.gts[g].id, taken[g]);
  }
  // Images are already in id order and each image's detections in rank
  // order, so a stable sort reproduces the documented tie-breaking.
  std::stable_sort(out.detections.begin(), out.detections.end(),
                   [](const DetMatch& l, const DetMatch& r) { return l.score > r.score; });
  return out;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double final_recall(const MatchResult& m) {
  if (m.gt_count == 0) return 0.0;
  return static_cast<double>(m.true_positives()) / static_cast<double>(m.gt_count);
}

Prf prf_prepared(const Prepared& p, double tau, double iou_threshold) {
  MatchOptions opts;
  opts.min_score = tau;
  const MatchResult m = match_prepared(p, iou_threshold, opts);
  Prf out;
  out.tau = tau;
  out.kept = m.detections.size();
  out.true_positives = m.true_positives();
  out.support = p.gt_count;
  for (const auto& pi : p.images) {
    const bool any_kept = std::any_of(pi.image->dets.begin(), pi.image->dets.end(),
                                      [&](const EvalDetection& d) { return d.score >= tau; });
    if (any_kept) out.support_detected_images += pi.image->gts.size();
  }
  out.precision = out.kept ? static_cast<double>(out.true_positives) / static_cast<double>(out.kept) : 0.0;
  out.recall = out.support ? static_cast<double>(out.true_positives) / static_cast<double>(out.support) : 0.0;
  out.f1 = f1_score(out.precision, out.recall);
  return out;
}

}  // namespace

MatchResult match(const EvalScene& scene, double iou_threshold, IouKind kind, const MatchOptions& opts) {
  return match_prepared(prepare(scene, kind), iou_threshold, opts);
}

PRCurve pr_curve(const std::vector<bool>& tp_in_rank_order, std::size_t gt_count) {
  PRCurve c;
  c.support = gt_count;
  if (gt_count == 0) {
    c.undefined = true;
    return c;
  }
  std::size_t tp = 0;
  for (std::size_t k = 0; k < tp_in_rank_order.size(); ++k) {
    tp += tp_in_rank_order[k] ? 1 : 0;
    c.points.emplace_back(static_cast<double>(tp) / static_cast<double>(gt_count),
                          static_cast<double>(tp) / static_cast<double>(k + 1));
  }
  return c;
}

PRCurve pr_curve(const MatchResult& m) {
  std::vector<bool> flags;
  flags.reserve(m.detections.size());
  for (const auto& d : m.detections) flags.push_back(d.matched_gt.has_value());
  return pr_curve(flags, m.gt_count);
}

double average_precision(const PRCurve& curve) {
  if (curve.undefined || curve.points.empty()) return 0.0;
  const std::size_t n = curve.points.size();
  std::vector<double> envelope(n);
  for (std::size_t i = n; i-- > 0;)
    envelope[i] = i + 1 < n ? std::max(curve.points[i].second, envelope[i + 1]) : curve.points[i].second;
  double total = 0.0;
  std::size_t k = 0;  // recall is non-decreasing, so the first point with recall >= r only moves right
  for (int i = 0; i <= 100; ++i) {
    const double r = i / 100.0;
    while (k < n && curve.points[k].first < r) ++k;
    if (k < n) total += envelope[k];
  }
  return total / 101.0;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return t;
}

double ap_at(const EvalScene& scene, IouKind kind, double iou_threshold) {
  MatchOptions opts;
  opts.max_dets_per_image = kCocoMaxDets;
  return average_precision(pr_curve(match_prepared(prepare(scene, kind), iou_threshold, opts)));
}

double ap_range(const EvalScene& scene, IouKind kind) {
  const Prepared p = prepare(scene, kind);
  MatchOptions opts;
  opts.max_dets_per_image = kCocoMaxDets;
  std::vector<double> aps;
  for (double t : coco_iou_thresholds()) aps.push_back(average_precision(pr_curve(match_prepared(p, t, opts))));
  return mean(aps);
}

double ar_range(const EvalScene& scene, IouKind kind) {
  const Prepared p = prepare(scene, kind);
  MatchOptions opts;
  opts.max_dets_per_image = kCocoMaxDets;
  std::vector<double> ars;
  for (double t : coco_iou_thresholds()) ars.push_back(final_recall(match_prepared(p, t, opts)));
  return mean(ars);
}

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

Prf prf_at_confidence(const EvalScene& scene, double tau, double iou_threshold, IouKind kind) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("confidence threshold must lie in [0, 1]");
  return prf_prepared(prepare(scene, kind), tau, iou_threshold);
}

std::vector<Prf> threshold_table(const EvalScene& scene, std::span<const double> taus, double iou_threshold,
                                 IouKind kind) {
  for (double t : taus)
    if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("confidence threshold must lie in [0, 1]");
  const Prepared p = prepare(scene, kind);
  std::vector<Prf> rows;
  for (double t : taus) rows.push_back(prf_prepared(p, t, iou_threshold));
  return rows;
}

EvalReport evaluate(const EvalScene& scene, IouKind kind, const EvalConfig& cfg) {
  const Prepared p = prepare(scene, kind);
  EvalReport r;
  r.kind = kind;
  r.gt_count = p.gt_count;
  for (const auto& im : scene) r.det_count += im.dets.size();
  r.undefined = p.gt_count == 0;
  r.no_detections = r.det_count == 0;

  MatchOptions capped;
  capped.max_dets_per_image = kCocoMaxDets;
  std::vector<double> aps, ars;
  for (double t : coco_iou_thresholds()) {
    const MatchResult m = match_prepared(p, t, capped);
    aps.push_back(average_precision(pr_curve(m)));
    ars.push_back(final_recall(m));
  }
  r.ap50 = aps.front();
  r.ap_range = mean(aps);
  r.ar_range = mean(ars);
  for (double t : cfg.curve_ious) r.curves.emplace_back(t, pr_curve(match_prepared(p, t, capped)));
  for (double tau : cfg.taus) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("confidence threshold must lie in [0, 1]");
    r.thresholds.push_back(prf_prepared(p, tau, cfg.table_iou));
  }
  return r;
}

ojson report_json(const EvalReport& r, const ojson& header) {
  ojson j;
  j["header"] = header;
  j["iou_kind"] = iou_kind_name(r.kind);
  j["ap50"] = r.ap50;
  j["ap_range"] = r.ap_range;
  j["ar_range"] = r.ar_range;
  j["gt_count"] = r.gt_count;
  j["det_count"] = r.det_count;
  auto flags = ojson::array();
  if (r.undefined) flags.push_back("no_ground_truth");
  if (r.no_detections) flags.push_back("no_detections");
  j["flags"] = std::move(flags);
  auto rows = ojson::array();
  for (const auto& t : r.thresholds) {
    ojson o;
    o["tau"] = t.tau;
    o["precision"] = t.precision;
    o["recall"] = t.recall;
    o["f1"] = t.f1;
    o["support"] = t.support;
    o["support_detected_images"] = t.support_detected_images;
    o["true_positives"] = t.true_positives;
    o["kept"] = t.kept;
    rows.push_back(std::move(o));
  }
  j["thresholds"] = std::move(rows);
  auto curves = ojson::array();
  for (const auto& [iou, c] : r.curves) {
    ojson o;
    o["iou"] = iou;
    auto pts = ojson::array();
    for (const auto& [rec, prec] : c.points) pts.push_back({rec, prec});
    o["points"] = std::move(pts);
    o["support"] = c.support;
    if (c.undefined) o["undefined"] = true;
    curves.push_back(std::move(o));
  }
  j["curves"] = std::move(curves);
  return j;
}

std::string thresholds_csv(const EvalReport& r, const ojson& header) {
  std::ostringstream os;
  os << "# " << header.dump() << "\n";
  os << "tau,precision,recall,f1,support,support_detected_images\n";
  char buf[160];
  for (const auto& t : r.thresholds) {
    std::snprintf(buf, sizeof buf, "%.2f,%.4f,%.4f,%.4f,%zu,%zu\n", t.tau, t.precision, t.recall, t.f1, t.support,
                  t.support_detected_images);
    os << buf;
  }
  return os.str();
}

std::string curves_svg(const EvalReport& r, const ojson& header, const std::string& title) {
  constexpr int W = 480, H = 400, L = 60, T = 30, PW = 380, PH = 320;
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  auto esc = [](std::string s) {
    std::string o;
    for (char c : s) {
      if (c == '&') o += "&amp;";
      else if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '-') o += "&#45;";  // no "--" inside XML comments
      else o += c;
    }
    return o;
  };
  std::ostringstream os;
  char buf[128];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<!-- " << esc(header.dump()) << " -->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << esc(title) << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << PW << "\" height=\"" << PH
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 10; i += 2) {
    const double v = i / 10.0;
    std::snprintf(buf, sizeof buf, "%.1f", v);
    os << "<text x=\"" << L + v * PW << "\" y=\"" << T + PH + 16 << "\" text-anchor=\"middle\" font-size=\"10\">" << buf
       << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << T + PH - v * PH + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
       << buf << "</text>\n";
  }
  os << "<text x=\"" << L + PW / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\" font-size=\"12\">recall</text>\n";
  os << "<text x=\"14\" y=\"" << T + PH / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
     << T + PH / 2 << ")\">precision</text>\n";
  for (std::size_t ci = 0; ci < r.curves.size(); ++ci) {
    const auto& [iou, c] = r.curves[ci];
    const char* color = kColors[ci % 10];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [rec, prec] : c.points) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", L + rec * PW, T + PH - prec * PH);
      os << buf;
    }
    os << "\"/>\n";
    std::snprintf(buf, sizeof buf, "IoU %.2f", iou);
    os << "<text x=\"" << L + PW - 4 << "\" y=\"" << T + 14 + 12 * ci << "\" text-anchor=\"end\" font-size=\"10\" fill=\""
       << color << "\">" << buf << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace hicc
