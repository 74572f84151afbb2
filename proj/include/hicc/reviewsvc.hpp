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

// Expert side-by-side review of two model runs: sessions, an append-only
// assessment log with latest-wins resolution, and tallies.
//
// Store layout:
//   <root>/sessions/<session_id>.json
//   <root>/assessments.jsonl      one assessment per line, seq = 1, 2, ...

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hicc/error.hpp"
#include "hicc/runtime.hpp"

namespace hicc {

enum class Rating { unsatisfactory, sufficient, satisfactory };
enum class OthersDetected { yes, no, not_applicable };
enum class Comparison { a_better, similar, b_better };

std::string_view rating_name(Rating r);
std::string_view others_name(OthersDetected o);
std::string_view comparison_name(Comparison c);

struct ReviewImage {
  std::string id;
  std::string original;  // asset paths, relative to the asset root
  std::string run_a;
  std::string run_b;     // empty for single-run sessions
};

struct SessionSpec {
  std::string name;
  std::string run_a;
  std::string run_b;  // optional second run
  std::vector<ReviewImage> images;

  ojson to_json() const;
  static SessionSpec from_json(const ojson& j);  // ValidationError on bad fields
};

struct ReviewSession {
  std::string session_id;
  std::string created_at;
  SessionSpec spec;

  const ReviewImage* find_image(std::string_view id) const;
  bool has_run(std::string_view run) const { return run == spec.run_a || (!spec.run_b.empty() && run == spec.run_b); }
  ojson to_json() const;
  static ReviewSession from_json(const ojson& j);
};

// Deterministic id: FNV-1a over the canonical spec JSON.
std::string session_id_for(const SessionSpec& spec);

struct MissingAsset {
  std::string image_id;
  std::string path;
};

class MissingAssetsError : public ValidationError {
 public:
  explicit MissingAssetsError(std::vector<MissingAsset> missing);
  const std::vector<MissingAsset>& missing() const { return missing_; }

 private:
  std::vector<MissingAsset> missing_;
};

struct Assessment {
  std::string session_id;
  std::string image_id;
  std::string run_id;
  bool crucial_detected = false;
  OthersDetected others_detected = OthersDetected::not_applicable;
  int fp_count = 0;
  bool fp_exceeds_tp = false;
  Rating rating = Rating::sufficient;
  std::optional<Comparison> comparison;
  std::string reviewer;
  std::string timestamp;
  // Assigned by the store.
  std::uint64_t seq = 0;
  int revision = 0;

  ojson to_json() const;
};

struct FieldError {
  std::string field;
  std::string message;
};

class InvalidAssessment : public ValidationError {
 public:
  explicit InvalidAssessment(std::vector<FieldError> errors);
  const std::vector<FieldError>& errors() const { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

// Structural parse of a submitted assessment; collects every field error
// before throwing InvalidAssessment. seq/revision in the input are ignored
// unless `from_log` is set.
Assessment parse_assessment(const ojson& j, bool from_log = false);

struct RunTally {
  std::string run_id;
  std::size_t unsatisfactory = 0;
  std::size_t sufficient = 0;
  std::size_t satisfactory = 0;
  std::size_t assessed = 0;  // distinct images with an assessment for this run
};

struct TallyReport {
  std::string session_id;
  std::vector<RunTally> runs;  // run_a first
  std::size_t a_better = 0;
  std::size_t similar = 0;
  std::size_t b_better = 0;
  std::size_t comparisons = 0;
  std::size_t assessed_images = 0;

  ojson to_json() const;
};

// Counts over the latest assessment (highest seq) per (image, run); the
// comparison of an image is the latest non-empty one across its runs.
TallyReport tally(const ReviewSession& session, std::span<const Assessment> log);

// Reads and checks the assessment log. Throws IntegrityError naming
// file:line for any corrupt line or sequence gap.
std::vector<Assessment> replay_log(const std::filesystem::path& path);

class ReviewStore {
 public:
  // Opens or initializes the store; refuses (IntegrityError) on corruption.
  explicit ReviewStore(std::filesystem::path root);
  ~ReviewStore();
  ReviewStore(const ReviewStore&) = delete;
  ReviewStore& operator=(const ReviewStore&) = delete;

  // Idempotent: an identical spec returns the existing session unchanged.
  ReviewSession create_session(const SessionSpec& spec, const std::filesystem::path& asset_root);

  std::vector<ReviewSession> sessions() const;
  std::optional<ReviewSession> session(std::string_view id) const;
  std::vector<Assessment> assessments(std::string_view session_id) const;
  TallyReport tally(std::string_view session_id) const;  // IntegrityError on unknown id
  std::uint64_t last_seq() const;

  // Validates against the session, assigns seq, revision and (if empty)
  // timestamp, appends to the log and syncs it before returning.
  Assessment record(Assessment a);

  const std::filesystem::path& root() const { return root_; }
  void set_clock(std::function<std::string()> clock) { clock_ = std::move(clock); }

 private:
  struct State;
  std::shared_ptr<const State> snapshot() const;
  void publish(std::shared_ptr<const State> s);

  std::filesystem::path root_;
  std::function<std::string()> clock_;
  std::mutex write_mu_;
  mutable std::mutex snap_mu_;
  std::shared_ptr<const State> state_;
  int log_fd_ = -1;
};

std::string utc_timestamp();

}  // namespace hicc
