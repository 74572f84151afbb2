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

// Binary patch-classification metrics. A sample is predicted positive iff
// score >= tau. AP and AR are threshold averages: the mean of precision(tau)
// (resp. recall(tau)) over the 101 thresholds tau = i/100, i = 0..100, with
// precision := 0 when nothing is predicted positive.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hicc/patchgen.hpp"
#include "hicc/runtime.hpp"

namespace hicc {

struct ScoredSample {
  std::string patch_id;
  double score = 0.0;
  bool label = false;
};

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

Confusion confusion_at(std::span<const ScoredSample> samples, double tau);

struct ClsPrf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::size_t support = 0;  // positive labels
};

// Throws ValidationError on an empty sample list or tau outside [0, 1].
ClsPrf prf_cls(std::span<const ScoredSample> samples, double tau = 0.5);

struct ThresholdAverage {
  double value = 0.0;
  bool undefined = false;  // ar with no positive labels
};

ThresholdAverage ap_cls(std::span<const ScoredSample> samples);
ThresholdAverage ar_cls(std::span<const ScoredSample> samples);

// Area under the step PR curve, sum over distinct scores of
// (R_k - R_{k-1}) * P_k; offered for comparison with ap_cls.
double ap_cls_pr_area(std::span<const ScoredSample> samples);

struct ClsReport {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  double ap = 0.0;
  double ar = 0.0;
  std::size_t support = 0;
  std::size_t samples = 0;
  bool ar_undefined = false;
  bool pr_area = false;  // ap holds the PR-area variant
};

ClsReport cls_report(std::span<const ScoredSample> samples, const std::string& name, double tau = 0.5,
                     bool pr_area_ap = false);

// Reads `{patch_id, score}` lines; throws FormatError on malformed lines or
// scores outside [0, 1].
std::vector<std::pair<std::string, double>> read_scores(const std::filesystem::path& path);

// Joins scores with manifest labels on patch_id. Unknown ids are an
// IntegrityError; manifest records without a score are ignored.
std::vector<ScoredSample> join_scores(const PatchManifest& manifest,
                                      std::span<const std::pair<std::string, double>> scores);

ojson cls_reports_json(std::span<const ClsReport> rows, const ojson& header);
std::string cls_reports_csv(std::span<const ClsReport> rows, const ojson& header);

// One-vs-rest per class plus the macro average (multi-class mode).
struct ClassRow {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

std::vector<ClassRow> multiclass_report(std::span<const int> truth, std::span<const int> predicted,
                                        std::span<const std::string> class_names);

}  // namespace hicc
