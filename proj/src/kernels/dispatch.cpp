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

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "hicc/kernels.hpp"

namespace hicc::kernels {
namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(HICC_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#if defined(HICC_HAVE_NEON)
      return true;  // mandatory on AArch64
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* pick_default() {
  if (const char* env = std::getenv("HICC_SIMD")) {
    const std::string want(env);
    for (Isa isa : available_isas())
      if (isa_name(isa) == want) return &table_for(isa);
  }
  return &table_for(available_isas().back());
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> ptr{pick_default()};
  return ptr;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon})
    if (cpu_supports(isa)) out.push_back(isa);
  return out;
}

const KernelTable& table_for(Isa isa) {
  if (!cpu_supports(isa))
    throw std::invalid_argument("SIMD variant not available: " + std::string(isa_name(isa)));
  switch (isa) {
#if defined(HICC_HAVE_AVX2)
    case Isa::avx2: return avx2::table();
#endif
#if defined(HICC_HAVE_NEON)
    case Isa::neon: return neon::table();
#endif
    default: return scalar::table();
  }
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void set_active(Isa isa) { current().store(&table_for(isa), std::memory_order_release); }

OverlapCounts overlap_counts(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("overlap_counts: size mismatch");
  return active().overlap_counts(a.data(), b.data(), a.size());
}

void or_into(std::span<const std::uint8_t> src, std::span<std::uint8_t> dst) {
  if (src.size() != dst.size()) throw std::invalid_argument("or_into: size mismatch");
  active().or_into(src.data(), dst.data(), src.size());
}

void axpy(float alpha, std::span<const float> x, std::span<float> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  active().axpy_f32(alpha, x.data(), y.data(), x.size());
}

void max_into(std::span<const float> src, std::span<float> dst) {
  if (src.size() != dst.size()) throw std::invalid_argument("max_into: size mismatch");
  active().max_into_f32(src.data(), dst.data(), src.size());
}

void average_u8(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                std::span<std::uint8_t> out) {
  if (a.size() != b.size() || a.size() != out.size())
    throw std::invalid_argument("average_u8: size mismatch");
  active().avg_u8(a.data(), b.data(), out.data(), a.size());
}

}  // namespace hicc::kernels
