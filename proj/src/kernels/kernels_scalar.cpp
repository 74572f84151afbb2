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

#include "hicc/kernels.hpp"

#include <limits>

namespace hicc::kernels::scalar {
namespace {

std::size_t count_nonzero(const std::uint8_t* data, std::size_t n) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) count += data[i] != 0;
  return count;
}

OverlapCounts overlap_counts(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
  OverlapCounts out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool x = a[i] != 0;
    const bool y = b[i] != 0;
    out.intersection += x && y;
    out.union_ += x || y;
  }
  return out;
}

void or_into(const std::uint8_t* src, std::uint8_t* dst, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = (dst[i] | src[i]) != 0 ? 1 : 0;
}

void axpy_f32(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const float prod = alpha * x[i];
    y[i] = y[i] + prod;
  }
}

void relu_f32(float* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void max_into_f32(const float* src, float* dst, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] > dst[i] ? src[i] : dst[i];
}

float max_f32(const float* x, std::size_t n) {
  float m = -std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

double sum_f32(const float* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

void avg_u8(const std::uint8_t* a, const std::uint8_t* b, std::uint8_t* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = static_cast<std::uint8_t>((unsigned{a[i]} + unsigned{b[i]} + 1u) >> 1);
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{Isa::scalar, count_nonzero, overlap_counts, or_into, axpy_f32,
                             relu_f32,    max_into_f32,  max_f32,        sum_f32, avg_u8};
  return t;
}

}  // namespace hicc::kernels::scalar
