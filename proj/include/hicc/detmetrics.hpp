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

// Detection and instance-segmentation evaluation with COCO conventions:
//
//  * per image, detections are visited in descending score order (ties keep
//    input order) and each takes the unmatched ground truth of the same
//    category with the highest IoU >= threshold (ties: lowest gt index);
//  * all images' decisions are then pooled in descending score order (ties
//    by image id, then per-image rank) to form the precision/recall sweep;
//  * AP is the mean over recall levels r = i/100, i = 0..100, of the best
//    precision reached at recall >= r (0 if none);
//  * AP/AR ranges average over IoU thresholds 0.50, 0.55, ..., 0.95 with at
//    most 100 detections per image.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hicc/cocostore.hpp"
#include "hicc/maskgeom.hpp"
#include "hicc/runtime.hpp"

namespace hicc {

enum class IouKind { bbox, mask };

std::string_view iou_kind_name(IouKind k);
IouKind parse_iou_kind(std::string_view s);

// A rasterized mask stored as its tight bounding crop.
struct CroppedMask {
  int x0 = 0;
  int y0 = 0;
  BitGrid bits;
  std::size_t area = 0;

  static CroppedMask from_grid(const BitGrid& grid);
};

// Equals iou_mask on the uncropped grids.
double iou_cropped(const CroppedMask& a, const CroppedMask& b);

struct EvalInstance {
  std::int64_t id = 0;
  std::int64_t category_id = 0;
  BBox bbox;
  std::optional<CroppedMask> mask;
};

struct EvalDetection {
  std::int64_t category_id = 0;
  double score = 0.0;
  BBox bbox;
  std::optional<CroppedMask> mask;
};

struct ImageEval {
  std::int64_t image_id = 0;
  std::vector<EvalInstance> gts;
  std::vector<EvalDetection> dets;  // input order
};

// Images sorted by id; every ground-truth image appears even without detections.
using EvalScene = std::vector<ImageEval>;

// Masks are rasterized only for IouKind::mask; a detection without a
// segmentation then raises ValidationError.
EvalScene make_scene(const CocoDataset& gt, const DetectionSet& dets, IouKind kind);

inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();
inline constexpr std::size_t kCocoMaxDets = 100;

struct MatchOptions {
  std::size_t max_dets_per_image = kUnlimited;
  double min_score = 0.0;  // detections with score < min_score are dropped
};

struct DetMatch {
  std::int64_t image_id = 0;
  std::size_t det_index = 0;  // index into ImageEval::dets
  double score = 0.0;
  std::optional<std::int64_t> matched_gt;
  double iou = 0.0;  // IoU with the matched gt (0 when unmatched)
};

struct MatchResult {
  double iou_threshold = 0.5;
  IouKind kind = IouKind::bbox;
  std::vector<DetMatch> detections;  // pooled, descending score
  std::vector<std::pair<std::int64_t, bool>> gt_matched;  // (gt id, matched)
  std::size_t gt_count = 0;

  std::size_t true_positives() const;
};

MatchResult match(const EvalScene& scene, double iou_threshold, IouKind kind, const MatchOptions& opts = {});

struct PRCurve {
  std::vector<std::pair<double, double>> points;  // (recall, precision) per rank
  std::size_t support = 0;
  bool undefined = false;  // no ground truth
};

PRCurve pr_curve(const MatchResult& m);
PRCurve pr_curve(const std::vector<bool>& tp_in_rank_order, std::size_t gt_count);

double average_precision(const PRCurve& curve);

// 0.50, 0.55, ..., 0.95 computed as (50 + 5i) / 100.
std::vector<double> coco_iou_thresholds();

double ap_at(const EvalScene& scene, IouKind kind, double iou_threshold);
double ap_range(const EvalScene& scene, IouKind kind);
double ar_range(const EvalScene& scene, IouKind kind);

double f1_score(double precision, double recall);

struct Prf {
  double tau = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;                // all ground-truth instances
  std::size_t support_detected_images = 0;  // gts on images with >= 1 kept detection
  std::size_t true_positives = 0;
  std::size_t kept = 0;
};

Prf prf_at_confidence(const EvalScene& scene, double tau, double iou_threshold, IouKind kind);

std::vector<Prf> threshold_table(const EvalScene& scene, std::span<const double> taus, double iou_threshold,
                                 IouKind kind);

struct EvalConfig {
  std::vector<double> taus{0.3, 0.5, 0.7};
  double table_iou = 0.5;
  std::vector<double> curve_ious = coco_iou_thresholds();
};

struct EvalReport {
  IouKind kind = IouKind::bbox;
  double ap50 = 0.0;
  double ap_range = 0.0;
  double ar_range = 0.0;
  bool undefined = false;  // no ground truth: metrics reported as 0
  bool no_detections = false;
  std::size_t gt_count = 0;
  std::size_t det_count = 0;
  std::vector<Prf> thresholds;
  std::vector<std::pair<double, PRCurve>> curves;
};

EvalReport evaluate(const EvalScene& scene, IouKind kind, const EvalConfig& cfg = {});

ojson report_json(const EvalReport& r, const ojson& header);
std::string thresholds_csv(const EvalReport& r, const ojson& header);
std::string curves_svg(const EvalReport& r, const ojson& header, const std::string& title);

}  // namespace hicc
