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

#include "hicc/reviewsvc.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <ctime>
#include <fcntl.h>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unistd.h>

namespace hicc {

namespace fs = std::filesystem;

namespace {

template <typename E, std::size_t N>
std::optional<E> parse_enum(std::string_view s, const std::string_view (&names)[N]) {
  for (std::size_t i = 0; i < N; ++i)
    if (s == names[i]) return static_cast<E>(i);
  return std::nullopt;
}

template <std::size_t N>
std::string enum_choices(const std::string_view (&names)[N]) {
  std::string out;
  for (std::size_t i = 0; i < N; ++i) {
    if (i) out += ", ";
    out += names[i];
  }
  return out;
}

constexpr std::string_view kRatings[] = {"unsatisfactory", "sufficient", "satisfactory"};
constexpr std::string_view kOthers[] = {"yes", "no", "not_applicable"};
constexpr std::string_view kComparisons[] = {"a_better", "similar", "b_better"};

std::string join_missing(const std::vector<MissingAsset>& missing) {
  std::string msg = "missing assets:";
  for (const auto& m : missing) msg += " [" + m.image_id + "] " + m.path + ";";
  return msg;
}

std::string join_field_errors(const std::vector<FieldError>& errors) {
  std::string msg = "invalid assessment:";
  for (const auto& e : errors) msg += " " + e.field + ": " + e.message + ";";
  return msg;
}

std::string required_string(const ojson& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_string()) throw ValidationError(where + "." + key + " must be a string");
  return j[key].get<std::string>();
}

std::string optional_string(const ojson& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return {};
  if (!j[key].is_string()) throw ValidationError(where + "." + key + " must be a string");
  return j[key].get<std::string>();
}

bool safe_relative(const std::string& p) {
  if (p.empty()) return false;
  const fs::path path(p);
  if (path.is_absolute()) return false;
  for (const auto& part : path)
    if (part == "..") return false;
  return true;
}

}  // namespace

std::string_view rating_name(Rating r) { return kRatings[static_cast<int>(r)]; }
std::string_view others_name(OthersDetected o) { return kOthers[static_cast<int>(o)]; }
std::string_view comparison_name(Comparison c) { return kComparisons[static_cast<int>(c)]; }

ojson SessionSpec::to_json() const {
  ojson j;
  j["name"] = name;
  j["run_a"] = run_a;
  j["run_b"] = run_b;
  auto arr = ojson::array();
  for (const auto& im : images) {
    ojson o;
    o["id"] = im.id;
    o["original"] = im.original;
    o["run_a"] = im.run_a;
    o["run_b"] = im.run_b;
    arr.push_back(std::move(o));
  }
  j["images"] = std::move(arr);
  return j;
}

SessionSpec SessionSpec::from_json(const ojson& j) {
  if (!j.is_object()) throw ValidationError("session spec must be a JSON object");
  SessionSpec s;
  s.name = optional_string(j, "name", "spec");
  s.run_a = required_string(j, "run_a", "spec");
  s.run_b = optional_string(j, "run_b", "spec");
  if (s.run_a.empty()) throw ValidationError("spec.run_a must name a model run");
  if (s.run_a == s.run_b) throw ValidationError("spec.run_a and spec.run_b must differ");
  if (!j.contains("images") || !j["images"].is_array()) throw ValidationError("spec.images must be an array");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < j["images"].size(); ++i) {
    const auto& o = j["images"][i];
    const std::string where = "spec.images[" + std::to_string(i) + "]";
    if (!o.is_object()) throw ValidationError(where + " must be an object");
    ReviewImage im;
    im.id = required_string(o, "id", where);
    im.original = required_string(o, "original", where);
    im.run_a = required_string(o, "run_a", where);
    im.run_b = optional_string(o, "run_b", where);
    if (im.id.empty()) throw ValidationError(where + ".id must not be empty");
    if (!seen.insert(im.id).second) throw ValidationError(where + ": duplicate image id '" + im.id + "'");
    if (s.run_b.empty() != im.run_b.empty())
      throw ValidationError(where + ".run_b must be given exactly when the session has a second run");
    s.images.push_back(std::move(im));
  }
  if (s.images.empty()) throw ValidationError("session spec lists no images");
  return s;
}

const ReviewImage* ReviewSession::find_image(std::string_view id) const {
  for (const auto& im : spec.images)
    if (im.id == id) return &im;
  return nullptr;
}

ojson ReviewSession::to_json() const {
  ojson j;
  j["session_id"] = session_id;
  j["created_at"] = created_at;
  const ojson body = spec.to_json();
  for (auto& [k, v] : body.items()) j[k] = v;
  return j;
}

ReviewSession ReviewSession::from_json(const ojson& j) {
  ReviewSession s;
  s.session_id = required_string(j, "session_id", "session");
  s.created_at = required_string(j, "created_at", "session");
  s.spec = SessionSpec::from_json(j);
  return s;
}

std::string session_id_for(const SessionSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : spec.to_json().dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

MissingAssetsError::MissingAssetsError(std::vector<MissingAsset> missing)
    : ValidationError(join_missing(missing)), missing_(std::move(missing)) {}

InvalidAssessment::InvalidAssessment(std::vector<FieldError> errors)
    : ValidationError(join_field_errors(errors)), errors_(std::move(errors)) {}

ojson Assessment::to_json() const {
  ojson j;
  j["seq"] = seq;
  j["revision"] = revision;
  j["session_id"] = session_id;
  j["image_id"] = image_id;
  j["run_id"] = run_id;
  j["crucial_detected"] = crucial_detected;
  j["others_detected"] = others_name(others_detected);
  j["fp_count"] = fp_count;
  j["fp_exceeds_tp"] = fp_exceeds_tp;
  j["rating"] = rating_name(rating);
  j["comparison"] = comparison ? ojson(comparison_name(*comparison)) : ojson(nullptr);
  j["reviewer"] = reviewer;
  j["timestamp"] = timestamp;
  return j;
}

Assessment parse_assessment(const ojson& j, bool from_log) {
  std::vector<FieldError> errors;
  Assessment a;
  if (!j.is_object()) throw InvalidAssessment(std::vector<FieldError>{{"", "assessment must be a JSON object"}});

  auto str = [&](const char* key, std::string& out, bool required) {
    if (!j.contains(key) || j[key].is_null()) {
      if (required) errors.push_back({key, "required"});
    } else if (!j[key].is_string()) {
      errors.push_back({key, "must be a string"});
    } else {
      out = j[key].get<std::string>();
      if (required && out.empty()) errors.push_back({key, "must not be empty"});
    }
  };
  auto boolean = [&](const char* key, bool& out) {
    if (!j.contains(key)) errors.push_back({key, "required"});
    else if (!j[key].is_boolean()) errors.push_back({key, "must be true or false"});
    else out = j[key].get<bool>();
  };

  str("session_id", a.session_id, true);
  str("image_id", a.image_id, true);
  str("run_id", a.run_id, true);
  str("reviewer", a.reviewer, true);
  str("timestamp", a.timestamp, from_log);
  boolean("crucial_detected", a.crucial_detected);
  boolean("fp_exceeds_tp", a.fp_exceeds_tp);

  if (!j.contains("others_detected")) {
    errors.push_back({"others_detected", "required"});
  } else if (auto v = j["others_detected"].is_string()
                          ? parse_enum<OthersDetected>(j["others_detected"].get<std::string>(), kOthers)
                          : std::nullopt) {
    a.others_detected = *v;
  } else {
    errors.push_back({"others_detected", "must be one of " + enum_choices(kOthers)});
  }

  if (!j.contains("rating")) {
    errors.push_back({"rating", "required"});
  } else if (auto v = j["rating"].is_string() ? parse_enum<Rating>(j["rating"].get<std::string>(), kRatings)
                                              : std::nullopt) {
    a.rating = *v;
  } else {
    errors.push_back({"rating", "must be one of " + enum_choices(kRatings)});
  }

  if (j.contains("comparison") && !j["comparison"].is_null()) {
    if (auto v = j["comparison"].is_string()
                     ? parse_enum<Comparison>(j["comparison"].get<std::string>(), kComparisons)
                     : std::nullopt)
      a.comparison = *v;
    else
      errors.push_back({"comparison", "must be null or one of " + enum_choices(kComparisons)});
  }

  if (!j.contains("fp_count")) {
    errors.push_back({"fp_count", "required"});
  } else if (!j["fp_count"].is_number_integer()) {
    errors.push_back({"fp_count", "must be an integer"});
  } else {
    const auto v = j["fp_count"].get<long long>();
    if (v < 0) errors.push_back({"fp_count", "must be >= 0"});
    else if (v > 1000000) errors.push_back({"fp_count", "implausibly large"});
    else a.fp_count = static_cast<int>(v);
  }

  if (from_log) {
    if (!j.contains("seq") || !j["seq"].is_number_unsigned() || j["seq"].get<std::uint64_t>() == 0)
      errors.push_back({"seq", "must be a positive integer"});
    else
      a.seq = j["seq"].get<std::uint64_t>();
    if (!j.contains("revision") || !j["revision"].is_number_integer() || j["revision"].get<long long>() < 1)
      errors.push_back({"revision", "must be a positive integer"});
    else
      a.revision = j["revision"].get<int>();
  }

  if (!errors.empty()) throw InvalidAssessment(std::move(errors));
  return a;
}

ojson TallyReport::to_json() const {
  ojson j;
  j["session_id"] = session_id;
  auto runs_j = ojson::array();
  for (const auto& r : runs) {
    ojson o;
    o["run_id"] = r.run_id;
    o["unsatisfactory"] = r.unsatisfactory;
    o["sufficient"] = r.sufficient;
    o["satisfactory"] = r.satisfactory;
    o["assessed"] = r.assessed;
    runs_j.push_back(std::move(o));
  }
  j["runs"] = std::move(runs_j);
  j["comparison"] = {{"a_better", a_better}, {"similar", similar}, {"b_better", b_better}, {"total", comparisons}};
  j["assessed_images"] = assessed_images;
  return j;
}

TallyReport tally(const ReviewSession& session, std::span<const Assessment> log) {
  // Latest by seq, independent of the order the span happens to be in.
  std::map<std::pair<std::string, std::string>, const Assessment*> latest;
  std::map<std::string, const Assessment*> latest_cmp;
  for (const auto& a : log) {
    if (a.session_id != session.session_id) continue;
    auto& slot = latest[{a.image_id, a.run_id}];
    if (!slot || a.seq > slot->seq) slot = &a;
    if (a.comparison) {
      auto& c = latest_cmp[a.image_id];
      if (!c || a.seq > c->seq) c = &a;
    }
  }
  TallyReport t;
  t.session_id = session.session_id;
  std::vector<std::string> run_ids{session.spec.run_a};
  if (!session.spec.run_b.empty()) run_ids.push_back(session.spec.run_b);
  std::set<std::string> images;
  for (const auto& run : run_ids) {
    RunTally rt;
    rt.run_id = run;
    for (const auto& [key, a] : latest) {
      if (key.second != run) continue;
      ++rt.assessed;
      images.insert(key.first);
      switch (a->rating) {
        case Rating::unsatisfactory: ++rt.unsatisfactory; break;
        case Rating::sufficient: ++rt.sufficient; break;
        case Rating::satisfactory: ++rt.satisfactory; break;
      }
    }
    t.runs.push_back(rt);
  }
  for (const auto& [image, a] : latest_cmp) {
    switch (*a->comparison) {
      case Comparison::a_better: ++t.a_better; break;
      case Comparison::similar: ++t.similar; break;
      case Comparison::b_better: ++t.b_better; break;
    }
    ++t.comparisons;
  }
  t.assessed_images = images.size();
  return t;
}

std::vector<Assessment> replay_log(const fs::path& path) {
  std::vector<Assessment> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (in.eof()) throw IntegrityError(where + ": unterminated final line (torn write?)");
    if (line.empty()) throw IntegrityError(where + ": empty line");
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const ojson::parse_error& e) {
      throw IntegrityError(where + ": " + e.what());
    }
    Assessment a;
    try {
      a = parse_assessment(j, true);
    } catch (const InvalidAssessment& e) {
      throw IntegrityError(where + ": " + e.what());
    }
    if (a.seq != out.size() + 1)
      throw IntegrityError(where + ": sequence " + std::to_string(a.seq) + " where " + std::to_string(out.size() + 1) +
                           " was expected");
    out.push_back(std::move(a));
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Immutable snapshot; writers build a new one and swap the pointer.
struct ReviewStore::State {
  struct SessionLog {
    std::vector<Assessment> entries;
    std::map<std::tuple<std::string, std::string, std::string>, int> revisions;  // reviewer, image, run
  };
  std::map<std::string, ReviewSession, std::less<>> sessions;
  std::map<std::string, std::shared_ptr<const SessionLog>, std::less<>> logs;
  std::uint64_t last_seq = 0;
};

ReviewStore::ReviewStore(fs::path root) : root_(std::move(root)), clock_(utc_timestamp) {
  std::error_code ec;
  fs::create_directories(root_ / "sessions", ec);
  if (ec) throw std::runtime_error("cannot create store " + (root_ / "sessions").string() + ": " + ec.message());

  auto st = std::make_shared<State>();
  for (const auto& entry : fs::directory_iterator(root_ / "sessions")) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    try {
      ReviewSession s = ReviewSession::from_json(ojson::parse(in));
      if (s.session_id != session_id_for(s.spec))
        throw IntegrityError(entry.path().string() + ": session id does not match its contents");
      st->sessions.emplace(s.session_id, std::move(s));
    } catch (const ojson::exception& e) {
      throw IntegrityError(entry.path().string() + ": " + e.what());
    } catch (const ValidationError& e) {
      throw IntegrityError(entry.path().string() + ": " + e.what());
    }
  }

  const fs::path log_path = root_ / "assessments.jsonl";
  const auto entries = replay_log(log_path);
  std::map<std::string, std::shared_ptr<State::SessionLog>> logs;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Assessment& a = entries[i];
    const std::string where = log_path.string() + ":" + std::to_string(i + 1);
    auto sit = st->sessions.find(a.session_id);
    if (sit == st->sessions.end()) throw IntegrityError(where + ": unknown session " + a.session_id);
    if (!sit->second.find_image(a.image_id) || !sit->second.has_run(a.run_id))
      throw IntegrityError(where + ": image or run not in session " + a.session_id);
    auto& lg = logs[a.session_id];
    if (!lg) lg = std::make_shared<State::SessionLog>();
    const int rev = ++lg->revisions[{a.reviewer, a.image_id, a.run_id}];
    if (rev != a.revision)
      throw IntegrityError(where + ": revision " + std::to_string(a.revision) + " where " + std::to_string(rev) +
                           " was expected");
    lg->entries.push_back(a);
  }
  for (auto& [id, lg] : logs) st->logs.emplace(id, std::move(lg));
  st->last_seq = entries.size();
  state_ = std::move(st);

  log_fd_ = ::open(log_path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (log_fd_ < 0) throw std::runtime_error("cannot open " + log_path.string() + ": " + std::strerror(errno));
}

ReviewStore::~ReviewStore() {
  if (log_fd_ >= 0) {
    ::fsync(log_fd_);
    ::close(log_fd_);
  }
}

std::shared_ptr<const ReviewStore::State> ReviewStore::snapshot() const {
  std::lock_guard lock(snap_mu_);
  return state_;
}

void ReviewStore::publish(std::shared_ptr<const State> s) {
  std::lock_guard lock(snap_mu_);
  state_ = std::move(s);
}

ReviewSession ReviewStore::create_session(const SessionSpec& spec, const fs::path& asset_root) {
  if (spec.images.empty()) throw ValidationError("session spec lists no images");
  if (spec.run_a.empty()) throw ValidationError("session spec needs at least one run");
  std::vector<MissingAsset> missing;
  std::set<std::string> ids;
  for (const auto& im : spec.images) {
    if (!ids.insert(im.id).second) throw ValidationError("duplicate image id '" + im.id + "'");
    std::vector<std::string> paths{im.original, im.run_a};
    if (!spec.run_b.empty()) paths.push_back(im.run_b);
    for (const auto& p : paths) {
      if (!safe_relative(p)) throw ValidationError("image " + im.id + ": asset path '" + p + "' must be relative");
      if (!fs::is_regular_file(asset_root / p)) missing.push_back({im.id, p});
    }
  }
  if (!missing.empty()) throw MissingAssetsError(std::move(missing));

  const std::string id = session_id_for(spec);
  std::lock_guard lock(write_mu_);
  auto cur = snapshot();
  if (auto it = cur->sessions.find(id); it != cur->sessions.end()) return it->second;

  ReviewSession s{id, clock_(), spec};
  const fs::path final_path = root_ / "sessions" / (id + ".json");
  const fs::path tmp = final_path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << s.to_json().dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, final_path);

  auto next = std::make_shared<State>(*cur);
  next->sessions.emplace(id, s);
  publish(std::move(next));
  return s;
}

std::vector<ReviewSession> ReviewStore::sessions() const {
  auto st = snapshot();
  std::vector<ReviewSession> out;
  for (const auto& [id, s] : st->sessions) out.push_back(s);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.created_at < b.created_at; });
  return out;
}

std::optional<ReviewSession> ReviewStore::session(std::string_view id) const {
  auto st = snapshot();
  if (auto it = st->sessions.find(id); it != st->sessions.end()) return it->second;
  return std::nullopt;
}

std::vector<Assessment> ReviewStore::assessments(std::string_view session_id) const {
  auto st = snapshot();
  if (auto it = st->logs.find(session_id); it != st->logs.end()) return it->second->entries;
  return {};
}

TallyReport ReviewStore::tally(std::string_view session_id) const {
  auto st = snapshot();
  auto sit = st->sessions.find(session_id);
  if (sit == st->sessions.end()) throw IntegrityError("unknown session " + std::string(session_id));
  auto lit = st->logs.find(session_id);
  if (lit == st->logs.end()) return hicc::tally(sit->second, {});
  return hicc::tally(sit->second, lit->second->entries);
}

std::uint64_t ReviewStore::last_seq() const { return snapshot()->last_seq; }

Assessment ReviewStore::record(Assessment a) {
  std::lock_guard lock(write_mu_);
  auto cur = snapshot();

  std::vector<FieldError> errors;
  auto sit = cur->sessions.find(a.session_id);
  if (sit == cur->sessions.end()) {
    errors.push_back({"session_id", "unknown session"});
  } else {
    const ReviewSession& s = sit->second;
    if (!s.find_image(a.image_id)) errors.push_back({"image_id", "not part of session " + a.session_id});
    if (!s.has_run(a.run_id)) errors.push_back({"run_id", "not a run of session " + a.session_id});
    if (a.comparison && s.spec.run_b.empty())
      errors.push_back({"comparison", "session has a single run; nothing to compare"});
  }
  if (a.fp_count < 0) errors.push_back({"fp_count", "must be >= 0"});
  if (a.reviewer.empty()) errors.push_back({"reviewer", "must not be empty"});
  if (!errors.empty()) throw InvalidAssessment(std::move(errors));

  std::shared_ptr<State::SessionLog> lg;
  if (auto it = cur->logs.find(a.session_id); it != cur->logs.end())
    lg = std::make_shared<State::SessionLog>(*it->second);
  else
    lg = std::make_shared<State::SessionLog>();

  a.seq = cur->last_seq + 1;
  a.revision = lg->revisions[{a.reviewer, a.image_id, a.run_id}] + 1;
  if (a.timestamp.empty()) a.timestamp = clock_();

  const std::string line = a.to_json().dump() + "\n";
  std::size_t done = 0;
  while (done < line.size()) {
    const ssize_t n = ::write(log_fd_, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("assessment log write failed: " + std::string(std::strerror(errno)));
    }
    done += static_cast<std::size_t>(n);
  }
  ::fdatasync(log_fd_);

  lg->revisions[{a.reviewer, a.image_id, a.run_id}] = a.revision;
  lg->entries.push_back(a);
  auto next = std::make_shared<State>(*cur);
  next->logs[a.session_id] = std::move(lg);
  next->last_seq = a.seq;
  publish(std::move(next));
  return a;
}

}  // namespace hicc
