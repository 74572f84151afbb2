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

#include "hicc/review_server.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"

namespace hicc {

namespace fs = std::filesystem;

namespace {

constexpr const char* kJson = "application/json";

constexpr const char* kFallbackIndex = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>hicc review</title></head>
<body><h1>hicc review service</h1>
<p>No UI bundle mounted (start with --ui DIR). The JSON API is at <a href="/api/sessions">/api/sessions</a>.</p>
</body></html>
)";

void send_json(httplib::Response& res, const ojson& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, ojson{{"error", message}}, status);
}

std::string content_type_for(const fs::path& p) {
  std::string ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".json") return kJson;
  if (ext == ".html") return "text/html";
  return "application/octet-stream";
}

std::string asset_url(const std::string& rel) {
  return rel.empty() ? std::string() : "/assets/" + httplib::detail::encode_url(rel);
}

}  // namespace

ReviewServer::ReviewServer(ReviewStore& store, ServeOptions options)
    : store_(store), opt_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  // httplib defaults to SO_REUSEPORT, which would let a second server share
  // the port (and split the requests against one log) instead of failing.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  install_routes();
}

ReviewServer::~ReviewServer() { stop(); }

void ReviewServer::install_routes() {
  auto& svr = *server_;

  svr.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, ojson{{"status", "ok"}, {"last_seq", store_.last_seq()}});
  });

  svr.Get("/api/sessions", [this](const httplib::Request&, httplib::Response& res) {
    auto arr = ojson::array();
    for (const auto& s : store_.sessions()) {
      arr.push_back(ojson{{"session_id", s.session_id},
                          {"name", s.spec.name},
                          {"run_a", s.spec.run_a},
                          {"run_b", s.spec.run_b},
                          {"created_at", s.created_at},
                          {"image_count", s.spec.images.size()}});
    }
    send_json(res, ojson{{"sessions", std::move(arr)}});
  });

  svr.Get(R"(/api/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto s = store_.session(req.matches[1].str());
    if (!s) return send_error(res, 404, "unknown session");
    send_json(res, s->to_json());
  });

  svr.Get(R"(/api/sessions/([^/]+)/images)", [this](const httplib::Request& req, httplib::Response& res) {
    auto s = store_.session(req.matches[1].str());
    if (!s) return send_error(res, 404, "unknown session");
    auto arr = ojson::array();
    for (const auto& im : s->spec.images)
      arr.push_back(ojson{{"id", im.id},
                          {"original", asset_url(im.original)},
                          {"run_a", asset_url(im.run_a)},
                          {"run_b", asset_url(im.run_b)}});
    send_json(res, ojson{{"session_id", s->session_id}, {"images", std::move(arr)}});
  });

  svr.Get(R"(/api/sessions/([^/]+)/assessments)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1].str();
    if (!store_.session(id)) return send_error(res, 404, "unknown session");
    auto arr = ojson::array();
    for (const auto& a : store_.assessments(id)) arr.push_back(a.to_json());
    send_json(res, ojson{{"session_id", id}, {"assessments", std::move(arr)}});
  });

  svr.Get(R"(/api/sessions/([^/]+)/tally)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1].str();
    if (!store_.session(id)) return send_error(res, 404, "unknown session");
    send_json(res, store_.tally(id).to_json());
  });

  svr.Post("/api/assessments", [this](const httplib::Request& req, httplib::Response& res) {
    ojson body;
    try {
      body = ojson::parse(req.body);
    } catch (const ojson::parse_error& e) {
      return send_json(res, ojson{{"errors", {{{"field", ""}, {"message", std::string("malformed JSON: ") + e.what()}}}}},
                       400);
    }
    try {
      const Assessment stored = store_.record(parse_assessment(body));
      send_json(res, stored.to_json(), 201);
    } catch (const InvalidAssessment& e) {
      auto errs = ojson::array();
      for (const auto& fe : e.errors()) errs.push_back(ojson{{"field", fe.field}, {"message", fe.message}});
      send_json(res, ojson{{"errors", std::move(errs)}}, 400);
    }
  });

  svr.Get(R"(/assets/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
    if (opt_.asset_root.empty()) return send_error(res, 404, "no asset root configured");
    std::error_code ec;
    const fs::path root = fs::weakly_canonical(opt_.asset_root, ec);
    const fs::path target = fs::weakly_canonical(opt_.asset_root / req.matches[1].str(), ec);
    // Reject anything that resolves outside the root, including via symlinks.
    const auto rel = target.lexically_relative(root);
    if (ec || rel.empty() || *rel.begin() == ".." || !fs::is_regular_file(target))
      return send_error(res, 404, "no such asset");
    std::ifstream in(target, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    res.set_content(buf.str(), content_type_for(target));
  });

  if (!opt_.ui_root.empty()) {
    if (!svr.set_mount_point("/", opt_.ui_root.string()))
      throw ValidationError("UI directory " + opt_.ui_root.string() + " does not exist");
  } else {
    svr.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kFallbackIndex, "text/html"); });
  }

  svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    } catch (...) {
      send_error(res, 500, "internal error");
    }
  });
}

int ReviewServer::bind() {
  if (opt_.port == 0) {
    bound_port_ = server_->bind_to_any_port(opt_.host);
    if (bound_port_ < 0) throw std::runtime_error("cannot bind " + opt_.host);
  } else {
    if (!server_->bind_to_port(opt_.host, opt_.port))
      throw std::runtime_error("cannot bind " + opt_.host + ":" + std::to_string(opt_.port) + " (port in use?)");
    bound_port_ = opt_.port;
  }
  return bound_port_;
}

void ReviewServer::run() {
  if (bound_port_ < 0) bind();
  started_ = true;
  if (!stop_requested_) server_->listen_after_bind();
  finished_ = true;
}

void ReviewServer::stop() {
  stop_requested_ = true;
  // A run() already under way may not be listening yet; stopping before that
  // point would be lost and leave it serving forever.
  if (started_) {
    while (!server_->is_running() && !finished_) std::this_thread::sleep_for(std::chrono::milliseconds(1));
    server_->stop();
  }
}

}  // namespace hicc
