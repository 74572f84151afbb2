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

#include <arm_neon.h>

#include <limits>

#include "hicc/kernels.hpp"

namespace hicc::kernels::neon {
namespace {

inline uint8x16_t nonzero_ones(uint8x16_t v) { return vshrq_n_u8(vtstq_u8(v, v), 7); }

std::size_t count_nonzero(const std::uint8_t* data, std::size_t n) {
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) count += vaddvq_u8(nonzero_ones(vld1q_u8(data + i)));
  for (; i < n; ++i) count += data[i] != 0;
  return count;
}

OverlapCounts overlap_counts(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
  OverlapCounts out;
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const uint8x16_t x = nonzero_ones(vld1q_u8(a + i));
    const uint8x16_t y = nonzero_ones(vld1q_u8(b + i));
    out.intersection += vaddvq_u8(vandq_u8(x, y));
    out.union_ += vaddvq_u8(vorrq_u8(x, y));
  }
  for (; i < n; ++i) {
    const bool x = a[i] != 0;
    const bool y = b[i] != 0;
    out.intersection += x && y;
    out.union_ += x || y;
  }
  return out;
}

void or_into(const std::uint8_t* src, std::uint8_t* dst, std::size_t n) {
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16)
    vst1q_u8(dst + i, nonzero_ones(vorrq_u8(vld1q_u8(src + i), vld1q_u8(dst + i))));
  for (; i < n; ++i) dst[i] = (dst[i] | src[i]) != 0 ? 1 : 0;
}

void axpy_f32(float alpha, const float* x, float* y, std::size_t n) {
  const float32x4_t a = vdupq_n_f32(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t prod = vmulq_f32(a, vld1q_f32(x + i));
    vst1q_f32(y + i, vaddq_f32(vld1q_f32(y + i), prod));
  }
  for (; i < n; ++i) {
    const float prod = alpha * x[i];
    y[i] = y[i] + prod;
  }
}

void relu_f32(float* x, std::size_t n) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t v = vld1q_f32(x + i);
    vst1q_f32(x + i, vbslq_f32(vcgtq_f32(v, zero), v, zero));
  }
  for (; i < n; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void max_into_f32(const float* src, float* dst, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t s = vld1q_f32(src + i);
    const float32x4_t d = vld1q_f32(dst + i);
    vst1q_f32(dst + i, vbslq_f32(vcgtq_f32(s, d), s, d));
  }
  for (; i < n; ++i) dst[i] = src[i] > dst[i] ? src[i] : dst[i];
}

float max_f32(const float* x, std::size_t n) {
  float m = -std::numeric_limits<float>::infinity();
  std::size_t i = 0;
  if (n >= 4) {
    float32x4_t acc = vdupq_n_f32(m);
    for (; i + 4 <= n; i += 4) {
      const float32x4_t v = vld1q_f32(x + i);
      acc = vbslq_f32(vcgtq_f32(v, acc), v, acc);
    }
    float lanes[4];
    vst1q_f32(lanes, acc);
    for (float v : lanes) m = v > m ? v : m;
  }
  for (; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

double sum_f32(const float* x, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t v = vld1q_f32(x + i);
    acc0 = vaddq_f64(acc0, vcvt_f64_f32(vget_low_f32(v)));
    acc1 = vaddq_f64(acc1, vcvt_high_f64_f32(v));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += x[i];
  return s;
}

void avg_u8(const std::uint8_t* a, const std::uint8_t* b, std::uint8_t* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) vst1q_u8(out + i, vrhaddq_u8(vld1q_u8(a + i), vld1q_u8(b + i)));
  for (; i < n; ++i)
    out[i] = static_cast<std::uint8_t>((unsigned{a[i]} + unsigned{b[i]} + 1u) >> 1);
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{Isa::neon, count_nonzero, overlap_counts, or_into, axpy_f32,
                             relu_f32,  max_into_f32,  max_f32,        sum_f32, avg_u8};
  return t;
}

}  // namespace hicc::kernels::neon
