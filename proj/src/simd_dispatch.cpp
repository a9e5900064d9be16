// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#include "lumi/simd.h"

#include <cstdlib>
#include <cstring>

#if defined(__x86_64__) || defined(_M_X64)
#include <cpuid.h>
#endif

namespace lumi::simd {

namespace {

const Kernels kScalar = {
    "scalar",
    &scalar::dense_forward<float>,
    &scalar::dense_backward_data<float>,
    &scalar::dense_backward_weights<float>,
    &scalar::relu_backward<float>,
    &scalar::axpy<float>,
    &scalar::sqnorm<float>,
    &scalar::adam_step<float>,
};

#if defined(__x86_64__) || defined(_M_X64)

bool cpu_has_avx2() {
  unsigned eax, ebx, ecx, edx;
  if (!__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx)) return false;
  bool avx2 = (ebx & (1u << 5)) != 0;
  // OS must save/restore YMM state
  if (!__get_cpuid(1, &eax, &ebx, &ecx, &edx)) return false;
  bool osxsave = (ecx & (1u << 27)) != 0;
  if (!osxsave) return false;
  uint32_t xcr0_lo, xcr0_hi;
  __asm__("xgetbv" : "=a"(xcr0_lo), "=d"(xcr0_hi) : "c"(0));
  return avx2 && ((xcr0_lo & 0x6) == 0x6);
}

bool cpu_has_avx512() {
  unsigned eax, ebx, ecx, edx;
  if (!__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx)) return false;
  bool f = (ebx & (1u << 16)) != 0;   // AVX512F
  bool vl = (ebx & (1u << 31)) != 0;  // AVX512VL
  if (!(f && vl)) return false;
  if (!__get_cpuid(1, &eax, &ebx, &ecx, &edx)) return false;
  if ((ecx & (1u << 27)) == 0) return false;
  uint32_t xcr0_lo, xcr0_hi;
  __asm__("xgetbv" : "=a"(xcr0_lo), "=d"(xcr0_hi) : "c"(0));
  // XMM, YMM and the three ZMM state components
  return (xcr0_lo & 0xe6) == 0xe6;
}

#endif

const Kernels* pick_active() {
  const char* forced = std::getenv("LUMI_SIMD");
#if defined(__x86_64__) || defined(_M_X64)
  if (forced) {
    if (!std::strcmp(forced, "scalar")) return &kScalar;
    if (!std::strcmp(forced, "avx2") && avx2_kernels().name && cpu_has_avx2())
      return &avx2_kernels();
    if (!std::strcmp(forced, "avx512") && avx512_kernels().name && cpu_has_avx512())
      return &avx512_kernels();
    return &kScalar;
  }
  if (avx512_kernels().name && cpu_has_avx512()) return &avx512_kernels();
  if (avx2_kernels().name && cpu_has_avx2()) return &avx2_kernels();
#elif defined(__aarch64__)
  if (forced && !std::strcmp(forced, "scalar")) return &kScalar;
  if (neon_kernels().name) return &neon_kernels();
#else
  (void)forced;
#endif
  return &kScalar;
}

}  // namespace

const Kernels& scalar_kernels() { return kScalar; }

const Kernels& active() {
  static const Kernels* chosen = pick_active();
  return *chosen;
}

const Kernels* const* available(int* count) {
  static const Kernels* list[4];
  static int n = [] {
    int k = 0;
    list[k++] = &kScalar;
#if defined(__x86_64__) || defined(_M_X64)
    if (avx2_kernels().name && cpu_has_avx2()) list[k++] = &avx2_kernels();
    if (avx512_kernels().name && cpu_has_avx512()) list[k++] = &avx512_kernels();
#elif defined(__aarch64__)
    if (neon_kernels().name) list[k++] = &neon_kernels();
#endif
    return k;
  }();
  *count = n;
  return list;
}

}  // namespace lumi::simd
