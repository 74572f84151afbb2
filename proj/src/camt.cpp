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

#include "hicc/camt.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "hicc/error.hpp"

namespace hicc {

namespace {

constexpr char kMagic[4] = {'C', 'A', 'M', 'T'};
constexpr const char* kOrder = "activations_then_gradients";

std::uint32_t load_u32le(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

void store_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::string canonical_header(const CamTensors& t) {
  ojson h;
  h["k"] = t.k;
  h["hc"] = t.hc;
  h["wc"] = t.wc;
  h["window"] = {t.window.x, t.window.y, t.window.w, t.window.h};
  h["order"] = kOrder;
  return h.dump();
}

struct HeaderFields {
  int k, hc, wc;
  Window window;
};

HeaderFields parse_header(const std::string& text, const std::string& source) {
  ojson h;
  try {
    h = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw FormatError(source + ": bad CAMT header JSON: " + e.what());
  }
  try {
    HeaderFields f{h.at("k").get<int>(), h.at("hc").get<int>(), h.at("wc").get<int>(), {}};
    const auto& w = h.at("window");
    if (!w.is_array() || w.size() != 4) throw FormatError(source + ": CAMT window must be [x, y, w, h]");
    f.window = Window{w[0].get<int>(), w[1].get<int>(), w[2].get<int>(), w[3].get<int>()};
    if (h.at("order").get<std::string>() != kOrder)
      throw FormatError(source + ": unsupported CAMT tensor order '" + h.at("order").get<std::string>() + "'");
    if (f.k < 1 || f.hc < 1 || f.wc < 1) throw FormatError(source + ": CAMT dimensions must be positive");
    if (f.window.w < 1 || f.window.h < 1) throw FormatError(source + ": CAMT window must have positive size");
    return f;
  } catch (const ojson::exception& e) {
    throw FormatError(source + ": bad CAMT header: " + e.what());
  }
}

}  // namespace

std::span<const float> CamTensors::activation(int channel) const {
  return std::span<const float>(activations).subspan(static_cast<std::size_t>(channel) * plane_size(), plane_size());
}

std::span<const float> CamTensors::gradient(int channel) const {
  return std::span<const float>(gradients).subspan(static_cast<std::size_t>(channel) * plane_size(), plane_size());
}

void CamTensors::validate() const {
  if (k < 1 || hc < 1 || wc < 1) throw ValidationError("CAM tensors need k, hc, wc >= 1");
  const std::size_t n = static_cast<std::size_t>(k) * plane_size();
  if (activations.size() != n || gradients.size() != n)
    throw ValidationError("CAM tensors: activation/gradient shape mismatch");
  if (window.w < 1 || window.h < 1) throw ValidationError("CAM tensors: empty window");
}

CamTensors parse_camt(std::span<const std::uint8_t> bytes, const std::string& source) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError(source + ": bad magic bytes (expected CAMT)");
  const std::uint32_t hlen = load_u32le(bytes.data() + 4);
  if (bytes.size() - 8 < hlen) throw FormatError(source + ": truncated CAMT header");
  CamTensors t;
  t.header_text.assign(reinterpret_cast<const char*>(bytes.data() + 8), hlen);
  const HeaderFields f = parse_header(t.header_text, source);
  t.k = f.k;
  t.hc = f.hc;
  t.wc = f.wc;
  t.window = f.window;
  const std::size_t n = static_cast<std::size_t>(t.k) * t.plane_size();
  const std::size_t payload = bytes.size() - 8 - hlen;
  if (payload != 2 * n * 4)
    throw FormatError(source + ": CAMT payload has " + std::to_string(payload) + " bytes, header implies " +
                      std::to_string(2 * n * 4));
  const std::uint8_t* p = bytes.data() + 8 + hlen;
  t.activations.resize(n);
  t.gradients.resize(n);
  for (std::size_t i = 0; i < n; ++i) t.activations[i] = std::bit_cast<float>(load_u32le(p + 4 * i));
  p += 4 * n;
  for (std::size_t i = 0; i < n; ++i) t.gradients[i] = std::bit_cast<float>(load_u32le(p + 4 * i));
  return t;
}

CamTensors read_camt(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_camt(bytes, path.string());
}

std::vector<std::uint8_t> encode_camt(const CamTensors& t) {
  t.validate();
  std::string header = canonical_header(t);
  if (!t.header_text.empty()) {
    try {
      const HeaderFields f = parse_header(t.header_text, "<header>");
      if (f.k == t.k && f.hc == t.hc && f.wc == t.wc && f.window == t.window) header = t.header_text;
    } catch (const FormatError&) {
    }
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  store_u32le(out, static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  out.reserve(out.size() + 8 * t.activations.size());
  for (float v : t.activations) store_u32le(out, std::bit_cast<std::uint32_t>(v));
  for (float v : t.gradients) store_u32le(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

void write_camt(const std::filesystem::path& path, const CamTensors& t) {
  const auto bytes = encode_camt(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace hicc
