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

#include "hicc/clsmetrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "hicc/detmetrics.hpp"
#include "hicc/error.hpp"

namespace hicc {

Confusion confusion_at(std::span<const ScoredSample> samples, double tau) {
  Confusion c;
  for (const auto& s : samples) {
    const bool pred = s.score >= tau;
    if (pred && s.label) ++c.tp;
    else if (pred) ++c.fp;
    else if (s.label) ++c.fn;
    else ++c.tn;
  }
  return c;
}

ClsPrf prf_cls(std::span<const ScoredSample> samples, double tau) {
  if (samples.empty()) throw ValidationError("prf_cls: no samples");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("prf_cls: tau must lie in [0, 1]");
  const Confusion c = confusion_at(samples, tau);
  ClsPrf out;
  out.support = c.tp + c.fn;
  out.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  out.recall = out.support ? static_cast<double>(c.tp) / static_cast<double>(out.support) : 0.0;
  out.f1 = f1_score(out.precision, out.recall);
  out.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(samples.size());
  return out;
}

namespace {

struct SortedScores {
  std::vector<double> pos;
  std::vector<double> neg;

  explicit SortedScores(std::span<const ScoredSample> samples) {
    for (const auto& s : samples) (s.label ? pos : neg).push_back(s.score);
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
  }

  // Number of scores >= tau.
  static std::size_t at_least(const std::vector<double>& v, double tau) {
    return static_cast<std::size_t>(v.end() - std::lower_bound(v.begin(), v.end(), tau));
  }
};

}  // namespace

ThresholdAverage ap_cls(std::span<const ScoredSample> samples) {
  const SortedScores s(samples);
  double total = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double tau = i / 100.0;
    const std::size_t tp = SortedScores::at_least(s.pos, tau);
    const std::size_t fp = SortedScores::at_least(s.neg, tau);
    if (tp + fp) total += static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  return ThresholdAverage{total / 101.0, false};
}

ThresholdAverage ar_cls(std::span<const ScoredSample> samples) {
  const SortedScores s(samples);
  if (s.pos.empty()) return ThresholdAverage{0.0, true};
  double total = 0.0;
  for (int i = 0; i <= 100; ++i)
    total += static_cast<double>(SortedScores::at_least(s.pos, i / 100.0)) / static_cast<double>(s.pos.size());
  return ThresholdAverage{total / 101.0, false};
}

double ap_cls_pr_area(std::span<const ScoredSample> samples) {
  std::vector<const ScoredSample*> order;
  std::size_t positives = 0;
  for (const auto& s : samples) {
    order.push_back(&s);
    positives += s.label;
  }
  if (positives == 0) return 0.0;
  std::stable_sort(order.begin(), order.end(), [](auto* l, auto* r) { return l->score > r->score; });
  double area = 0.0, prev_recall = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    tp += order[i]->label;
    ++seen;
    if (i + 1 < order.size() && order[i + 1]->score == order[i]->score) continue;
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    area += (recall - prev_recall) * static_cast<double>(tp) / static_cast<double>(seen);
    prev_recall = recall;
  }
  return area;
}

ClsReport cls_report(std::span<const ScoredSample> samples, const std::string& name, double tau, bool pr_area_ap) {
  const ClsPrf prf = prf_cls(samples, tau);
  ClsReport r;
  r.name = name;
  r.precision = prf.precision;
  r.recall = prf.recall;
  r.f1 = prf.f1;
  r.accuracy = prf.accuracy;
  r.support = prf.support;
  r.samples = samples.size();
  r.ap = pr_area_ap ? ap_cls_pr_area(samples) : ap_cls(samples).value;
  r.pr_area = pr_area_ap;
  const auto ar = ar_cls(samples);
  r.ar = ar.value;
  r.ar_undefined = ar.undefined;
  return r;
}

std::vector<std::pair<std::string, double>> read_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::pair<std::string, double>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const ojson::parse_error& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("patch_id") || !j["patch_id"].is_string() || !j.contains("score") ||
        !j["score"].is_number())
      throw FormatError(where + ": expected {\"patch_id\": string, \"score\": number}");
    const double score = j["score"].get<double>();
    if (!(score >= 0.0 && score <= 1.0)) throw FormatError(where + ": score outside [0, 1]");
    out.emplace_back(j["patch_id"].get<std::string>(), score);
  }
  return out;
}

std::vector<ScoredSample> join_scores(const PatchManifest& manifest,
                                      std::span<const std::pair<std::string, double>> scores) {
  std::unordered_map<std::string, bool> labels;
  for (const auto& r : manifest.records) labels.emplace(r.patch_id, r.label);
  std::vector<ScoredSample> out;
  std::vector<std::string> unknown;
  for (const auto& [id, score] : scores) {
    auto it = labels.find(id);
    if (it == labels.end()) {
      unknown.push_back(id);
      continue;
    }
    out.push_back(ScoredSample{id, score, it->second});
  }
  if (!unknown.empty()) {
    std::string msg = "scores reference patch ids missing from the manifest:";
    for (std::size_t i = 0; i < unknown.size() && i < 10; ++i) msg += " " + unknown[i];
    if (unknown.size() > 10) msg += " ... (" + std::to_string(unknown.size()) + " total)";
    throw IntegrityError(msg);
  }
  return out;
}

ojson cls_reports_json(std::span<const ClsReport> rows, const ojson& header) {
  ojson j;
  j["header"] = header;
  auto arr = ojson::array();
  for (const auto& r : rows) {
    ojson o;
    o["test_set"] = r.name;
    o["precision"] = r.precision;
    o["recall"] = r.recall;
    o["f1"] = r.f1;
    o["accuracy"] = r.accuracy;
    o["ap"] = r.ap;
    o["ar"] = r.ar;
    o["support"] = r.support;
    o["samples"] = r.samples;
    o["ap_estimator"] = r.pr_area ? "pr_area" : "threshold_average";
    if (r.ar_undefined) o["flags"] = {"no_positive_labels"};
    arr.push_back(std::move(o));
  }
  j["rows"] = std::move(arr);
  return j;
}

std::string cls_reports_csv(std::span<const ClsReport> rows, const ojson& header) {
  std::ostringstream os;
  os << "# " << header.dump() << "\n";
  os << "test_set,precision,recall,ap,ar,support,f1,accuracy\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.3f,%.3f,%.3f,%.3f,%zu,%.3f,%.3f\n", r.name.c_str(), r.precision, r.recall,
                  r.ap, r.ar, r.support, r.f1, r.accuracy);
    os << buf;
  }
  return os.str();
}

std::vector<ClassRow> multiclass_report(std::span<const int> truth, std::span<const int> predicted,
                                        std::span<const std::string> class_names) {
  if (truth.size() != predicted.size()) throw ValidationError("multiclass_report: length mismatch");
  const int k = static_cast<int>(class_names.size());
  std::vector<ClassRow> rows;
  ClassRow avg{"average", 0.0, 0.0, 0.0, 0};
  for (int c = 0; c < k; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] < 0 || truth[i] >= k || predicted[i] < 0 || predicted[i] >= k)
        throw ValidationError("multiclass_report: class index out of range");
      const bool t = truth[i] == c, p = predicted[i] == c;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    ClassRow r;
    r.name = class_names[static_cast<std::size_t>(c)];
    r.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    r.f1 = f1_score(r.precision, r.recall);
    r.support = tp + fn;
    avg.precision += r.precision / k;
    avg.recall += r.recall / k;
    avg.f1 += r.f1 / k;
    avg.support += r.support;
    rows.push_back(std::move(r));
  }
  rows.push_back(avg);
  return rows;
}

}  // namespace hicc
