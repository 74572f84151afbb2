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

#include <stdexcept>
#include <string>

namespace hicc {

// Bad configuration or arguments supplied by the caller (CLI exit code 2).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input data: JSON, RLE, polygons, binary tensor files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cross-record consistency violations (dangling ids, duplicates).
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A scorer returned something outside the line protocol.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kToolName = "hicc";
inline constexpr const char* kToolVersion = HICC_VERSION;

}  // namespace hicc
