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

// HTTP/JSON front end of the review store.
//
//   GET  /api/health
//   GET  /api/sessions
//   GET  /api/sessions/{id}
//   GET  /api/sessions/{id}/images
//   GET  /api/sessions/{id}/assessments
//   GET  /api/sessions/{id}/tally
//   POST /api/assessments          400 {"errors":[{"field","message"}]}
//   GET  /assets/{path}            files under the asset root
//   GET  /                         UI bundle when a ui_root is given

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>

#include "hicc/reviewsvc.hpp"

namespace httplib {
class Server;
}

namespace hicc {

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path asset_root;
  std::filesystem::path ui_root;  // optional
};

class ReviewServer {
 public:
  ReviewServer(ReviewStore& store, ServeOptions options);
  ~ReviewServer();

  // Binds the socket; throws std::runtime_error if the address is taken.
  // Returns the bound port.
  int bind();
  // Serves until stop(); call bind() first.
  void run();
  void stop();

 private:
  void install_routes();

  ReviewStore& store_;
  ServeOptions opt_;
  std::unique_ptr<httplib::Server> server_;
  int bound_port_ = -1;
  std::atomic<bool> started_{false};
  std::atomic<bool> stop_requested_{false};
  std::atomic<bool> finished_{false};
};

}  // namespace hicc
