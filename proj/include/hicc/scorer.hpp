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

// Pluggable patch scorers for tiled inference.
//
// Subprocess line protocol (UTF-8, one JSON object per line):
//   request  {"image":"<path>","x":0,"y":0,"w":224,"h":224}
//   response {"score":0.87}
// Recordings are JSON Lines {"image","x","y","w","h","score"}; lines with
// "type":"header" carry provenance and are skipped on replay.

#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <sys/types.h>

#include "hicc/patchgen.hpp"

namespace hicc {

// Implementations need not be thread-safe; callers serialize requests.
class Scorer {
 public:
  virtual ~Scorer() = default;
  // May return any value; range checking is the caller's job so the error
  // can name the window. Throws ProtocolError when no score can be read.
  virtual double score(const std::string& image, const Window& w) = 0;
  virtual std::string describe() const = 0;
};

class ConstantScorer final : public Scorer {
 public:
  explicit ConstantScorer(double value) : value_(value) {}
  double score(const std::string&, const Window&) override { return value_; }
  std::string describe() const override;

 private:
  double value_;
};

// Replays a recording. Lookups try the exact image string first, then the
// file name alone, so recordings survive moving the image directory.
class FileScorer final : public Scorer {
 public:
  explicit FileScorer(const std::filesystem::path& recording);
  double score(const std::string& image, const Window& w) override;
  std::string describe() const override;
  std::size_t size() const { return exact_.size(); }

 private:
  using Key = std::tuple<std::string, int, int, int, int>;
  std::filesystem::path path_;
  std::map<Key, double> exact_;
  std::map<Key, double> by_name_;
};

// Runs `command` through /bin/sh and talks the line protocol over pipes.
class SubprocessScorer final : public Scorer {
 public:
  explicit SubprocessScorer(std::string command);
  ~SubprocessScorer() override;
  SubprocessScorer(const SubprocessScorer&) = delete;
  SubprocessScorer& operator=(const SubprocessScorer&) = delete;

  double score(const std::string& image, const Window& w) override;
  std::string describe() const override;

 private:
  std::string command_;
  pid_t pid_ = -1;
  std::FILE* to_child_ = nullptr;
  std::FILE* from_child_ = nullptr;
};

// "const:<v>", "file:<path>", or "cmd:<shell command>".
std::unique_ptr<Scorer> make_scorer(const std::string& spec);

}  // namespace hicc
