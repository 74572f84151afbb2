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

// Data-parallel inner loops used by mask geometry, patch labeling and the
// CAM compositor. Every kernel has a scalar reference implementation; SIMD
// variants (AVX2 on x86-64, NEON on AArch64) are selected once at runtime
// based on CPU support and can be pinned via HICC_SIMD=scalar|avx2|neon.
//
// Integer and elementwise-float kernels are bit-identical across variants.
// sum_f32 accumulates in double with a lane-dependent order, so variants
// agree only to rounding.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace hicc::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

struct OverlapCounts {
  std::size_t intersection = 0;
  std::size_t union_ = 0;
};

struct KernelTable {
  Isa isa;
  std::size_t (*count_nonzero)(const std::uint8_t* data, std::size_t n);
  OverlapCounts (*overlap_counts)(const std::uint8_t* a, const std::uint8_t* b, std::size_t n);
  void (*or_into)(const std::uint8_t* src, std::uint8_t* dst, std::size_t n);
  void (*axpy_f32)(float alpha, const float* x, float* y, std::size_t n);
  void (*relu_f32)(float* x, std::size_t n);
  void (*max_into_f32)(const float* src, float* dst, std::size_t n);
  float (*max_f32)(const float* x, std::size_t n);
  double (*sum_f32)(const float* x, std::size_t n);
  void (*avg_u8)(const std::uint8_t* a, const std::uint8_t* b, std::uint8_t* out, std::size_t n);
};

namespace scalar {
const KernelTable& table();
}
#if defined(HICC_HAVE_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif
#if defined(HICC_HAVE_NEON)
namespace neon {
const KernelTable& table();
}
#endif

// ISAs compiled in and supported by the running CPU; scalar is always first.
std::vector<Isa> available_isas();

// Table for a specific ISA; throws std::invalid_argument if unavailable.
const KernelTable& table_for(Isa isa);

const KernelTable& active();
void set_active(Isa isa);

// Span conveniences over the active table.
inline std::size_t count_nonzero(std::span<const std::uint8_t> v) {
  return active().count_nonzero(v.data(), v.size());
}
OverlapCounts overlap_counts(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
void or_into(std::span<const std::uint8_t> src, std::span<std::uint8_t> dst);
void axpy(float alpha, std::span<const float> x, std::span<float> y);
inline void relu(std::span<float> x) { active().relu_f32(x.data(), x.size()); }
void max_into(std::span<const float> src, std::span<float> dst);
inline float max_value(std::span<const float> x) { return active().max_f32(x.data(), x.size()); }
inline double sum(std::span<const float> x) { return active().sum_f32(x.data(), x.size()); }
void average_u8(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                std::span<std::uint8_t> out);

}  // namespace hicc::kernels
