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

// Compiled with -mavx2 only (no -mfma) so axpy keeps separate multiply and
// add roundings and stays bit-identical to the scalar reference.

#include <immintrin.h>

#include <limits>

#include "hicc/kernels.hpp"

namespace hicc::kernels::avx2 {
namespace {

inline unsigned nonzero_mask(__m256i v) {
  const __m256i zero = _mm256_setzero_si256();
  return ~static_cast<unsigned>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(v, zero)));
}

std::size_t count_nonzero(const std::uint8_t* data, std::size_t n) {
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + i));
    count += static_cast<std::size_t>(__builtin_popcount(nonzero_mask(v)));
  }
  for (; i < n; ++i) count += data[i] != 0;
  return count;
}

OverlapCounts overlap_counts(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
  OverlapCounts out;
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const unsigned ma = nonzero_mask(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i)));
    const unsigned mb = nonzero_mask(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i)));
    out.intersection += static_cast<std::size_t>(__builtin_popcount(ma & mb));
    out.union_ += static_cast<std::size_t>(__builtin_popcount(ma | mb));
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
  const __m256i zero = _mm256_setzero_si256();
  const __m256i one = _mm256_set1_epi8(1);
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i s = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + i));
    const __m256i d = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(dst + i));
    const __m256i is_zero = _mm256_cmpeq_epi8(_mm256_or_si256(s, d), zero);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst + i), _mm256_andnot_si256(is_zero, one));
  }
  for (; i < n; ++i) dst[i] = (dst[i] | src[i]) != 0 ? 1 : 0;
}

void axpy_f32(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 a = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 prod = _mm256_mul_ps(a, _mm256_loadu_ps(x + i));
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
  }
  for (; i < n; ++i) {
    const float prod = alpha * x[i];
    y[i] = y[i] + prod;
  }
}

void relu_f32(float* x, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(x + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void max_into_f32(const float* src, float* dst, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(dst + i, _mm256_max_ps(_mm256_loadu_ps(src + i), _mm256_loadu_ps(dst + i)));
  for (; i < n; ++i) dst[i] = src[i] > dst[i] ? src[i] : dst[i];
}

float max_f32(const float* x, std::size_t n) {
  float m = -std::numeric_limits<float>::infinity();
  std::size_t i = 0;
  if (n >= 8) {
    __m256 acc = _mm256_set1_ps(m);
    for (; i + 8 <= n; i += 8) acc = _mm256_max_ps(_mm256_loadu_ps(x + i), acc);
    alignas(32) float lanes[8];
    _mm256_store_ps(lanes, acc);
    for (float v : lanes) m = v > m ? v : m;
  }
  for (; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

double sum_f32(const float* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
    acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += x[i];
  return s;
}

void avg_u8(const std::uint8_t* a, const std::uint8_t* b, std::uint8_t* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), _mm256_avg_epu8(va, vb));
  }
  for (; i < n; ++i)
    out[i] = static_cast<std::uint8_t>((unsigned{a[i]} + unsigned{b[i]} + 1u) >> 1);
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{Isa::avx2, count_nonzero, overlap_counts, or_into, axpy_f32,
                             relu_f32,  max_into_f32,  max_f32,        sum_f32, avg_u8};
  return t;
}

}  // namespace hicc::kernels::avx2
