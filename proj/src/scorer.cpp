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

#include "hicc/scorer.hpp"

#include <csignal>
#include <cstring>
#include <fstream>
#include <sys/wait.h>
#include <unistd.h>

#include "hicc/error.hpp"

namespace hicc {

namespace {

std::string window_label(const std::string& image, const Window& w) {
  return image + " window (" + std::to_string(w.x) + "," + std::to_string(w.y) + "," + std::to_string(w.w) + "," +
         std::to_string(w.h) + ")";
}

}  // namespace

std::string ConstantScorer::describe() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "const:%.17g", value_);
  return buf;
}

FileScorer::FileScorer(const std::filesystem::path& recording) : path_(recording) {
  std::ifstream in(recording);
  if (!in) throw FormatError("cannot open score recording " + recording.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = recording.string() + ":" + std::to_string(lineno);
    try {
      const ojson j = ojson::parse(line);
      if (j.value("type", "") == "header") continue;
      const std::string image = j.at("image").get<std::string>();
      const Key key{image, j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
      const double s = j.at("score").get<double>();
      exact_[key] = s;
      Key named = key;
      std::get<0>(named) = std::filesystem::path(image).filename().string();
      by_name_[named] = s;
    } catch (const ojson::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
}

double FileScorer::score(const std::string& image, const Window& w) {
  const Key key{image, w.x, w.y, w.w, w.h};
  if (auto it = exact_.find(key); it != exact_.end()) return it->second;
  Key named = key;
  std::get<0>(named) = std::filesystem::path(image).filename().string();
  if (auto it = by_name_.find(named); it != by_name_.end()) return it->second;
  throw ProtocolError(path_.string() + ": no recorded score for " + window_label(image, w));
}

std::string FileScorer::describe() const { return "file:" + path_.string(); }

SubprocessScorer::SubprocessScorer(std::string command) : command_(std::move(command)) {
  // A dead child must surface as a write error, not kill us.
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0) throw std::runtime_error("pipe: " + std::string(std::strerror(errno)));
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw std::runtime_error("pipe: " + std::string(std::strerror(errno)));
  }
  pid_ = fork();
  if (pid_ < 0) throw std::runtime_error("fork: " + std::string(std::strerror(errno)));
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = fdopen(in_pipe[1], "w");
  from_child_ = fdopen(out_pipe[0], "r");
}

SubprocessScorer::~SubprocessScorer() {
  if (to_child_) std::fclose(to_child_);
  if (from_child_) std::fclose(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

double SubprocessScorer::score(const std::string& image, const Window& w) {
  ojson req;
  req["image"] = image;
  req["x"] = w.x;
  req["y"] = w.y;
  req["w"] = w.w;
  req["h"] = w.h;
  const std::string line = req.dump() + "\n";
  if (std::fputs(line.c_str(), to_child_) < 0 || std::fflush(to_child_) != 0)
    throw ProtocolError("scorer '" + command_ + "' closed its input at " + window_label(image, w));
  std::string reply;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, from_child_)) {
    reply += buf;
    if (!reply.empty() && reply.back() == '\n') break;
  }
  if (reply.empty()) throw ProtocolError("scorer '" + command_ + "' exited before answering " + window_label(image, w));
  try {
    const ojson j = ojson::parse(reply);
    if (!j.is_object() || !j.contains("score") || !j["score"].is_number())
      throw ProtocolError("scorer reply without numeric score for " + window_label(image, w));
    return j["score"].get<double>();
  } catch (const ojson::parse_error&) {
    throw ProtocolError("scorer sent a malformed line for " + window_label(image, w));
  }
}

std::string SubprocessScorer::describe() const { return "cmd:" + command_; }

std::unique_ptr<Scorer> make_scorer(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ValidationError("scorer spec must be const:<v>, file:<path> or cmd:<command>");
  const std::string kind = spec.substr(0, colon), arg = spec.substr(colon + 1);
  if (kind == "const") {
    try {
      std::size_t used = 0;
      const double v = std::stod(arg, &used);
      if (used != arg.size()) throw std::invalid_argument(arg);
      return std::make_unique<ConstantScorer>(v);
    } catch (const std::logic_error&) {
      throw ValidationError("bad constant scorer value '" + arg + "'");
    }
  }
  if (kind == "file") return std::make_unique<FileScorer>(arg);
  if (kind == "cmd") return std::make_unique<SubprocessScorer>(arg);
  throw ValidationError("unknown scorer kind '" + kind + "'");
}

}  // namespace hicc
