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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "json.hpp"

namespace hicc {

using ojson = nlohmann::ordered_json;

// Worker count: HIC_THREADS if set (>=1), else hardware concurrency.
std::size_t thread_budget();

// Runs fn(i) for i in [0, n) on up to thread_budget() workers. The first
// exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Provenance block embedded in every output artifact.
ojson run_header(const std::string& command, const ojson& config, std::uint64_t seed = 0);

}  // namespace hicc
