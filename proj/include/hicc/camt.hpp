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

// CAM tensor files (.camt): feature-map activations and score gradients for
// one scored window.
//
//   bytes 0..3   "CAMT"
//   bytes 4..7   header length N, uint32 little-endian
//   next N bytes UTF-8 JSON {"k":K,"hc":H,"wc":W,"window":[x,y,w,h],
//                            "order":"activations_then_gradients"}
//   remainder    2*K*H*W float32 little-endian, row-major, activations first

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hicc/patchgen.hpp"

namespace hicc {

struct CamTensors {
  int k = 0;
  int hc = 0;
  int wc = 0;
  Window window;
  std::vector<float> activations;  // k * hc * wc
  std::vector<float> gradients;    // k * hc * wc
  // Header bytes as read; re-emitted verbatim by encode_camt when still
  // consistent with the fields above, so foreign writers round-trip exactly.
  std::string header_text;

  std::size_t plane_size() const { return static_cast<std::size_t>(hc) * static_cast<std::size_t>(wc); }
  std::span<const float> activation(int channel) const;
  std::span<const float> gradient(int channel) const;
  void validate() const;
};

CamTensors parse_camt(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");
CamTensors read_camt(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_camt(const CamTensors& t);
void write_camt(const std::filesystem::path& path, const CamTensors& t);

}  // namespace hicc
