// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

// AVX-512F/VL variants. Same contracts as the scalar reference. The matrix
// kernels keep several independent accumulator chains in flight; the weight
// gradient works from a transposed activation scratch so nothing needs a
// horizontal reduction in its inner loop.

#include "lumi/simd.h"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <vector>

namespace lumi::simd {

namespace {

#if defined(__AVX512F__) && defined(__AVX512VL__)

inline __mmask16 tail_mask(int remaining) {
  return static_cast<__mmask16>((1u << remaining) - 1u);
}

void dense_forward_avx512(int rows, int cols, int n, const float* W, const float* b,
                          const float* x, float* y, bool relu) {
  const __m512 zero = _mm512_setzero_ps();
  for (int r = 0; r < rows; ++r) {
    const float* wr = W + static_cast<size_t>(r) * cols;
    float* yr = y + static_cast<size_t>(r) * n;
    const __m512 bias = _mm512_set1_ps(b ? b[r] : 0.0f);
    int i = 0;
    while (i < n) {
      const int rem = n - i;
      const __mmask16 k = rem >= 16 ? static_cast<__mmask16>(0xffff) : tail_mask(rem);
      // Four independent chains hide FMA latency across the c loop.
      __m512 a0 = bias, a1 = zero, a2 = zero, a3 = zero;
      const float* xi = x + i;
      int c = 0;
      for (; c + 4 <= cols; c += 4) {
        a0 = _mm512_fmadd_ps(_mm512_set1_ps(wr[c + 0]),
                             _mm512_maskz_loadu_ps(k, xi + static_cast<size_t>(c + 0) * n), a0);
        a1 = _mm512_fmadd_ps(_mm512_set1_ps(wr[c + 1]),
                             _mm512_maskz_loadu_ps(k, xi + static_cast<size_t>(c + 1) * n), a1);
        a2 = _mm512_fmadd_ps(_mm512_set1_ps(wr[c + 2]),
                             _mm512_maskz_loadu_ps(k, xi + static_cast<size_t>(c + 2) * n), a2);
        a3 = _mm512_fmadd_ps(_mm512_set1_ps(wr[c + 3]),
                             _mm512_maskz_loadu_ps(k, xi + static_cast<size_t>(c + 3) * n), a3);
      }
      for (; c < cols; ++c)
        a0 = _mm512_fmadd_ps(_mm512_set1_ps(wr[c]),
                             _mm512_maskz_loadu_ps(k, xi + static_cast<size_t>(c) * n), a0);
      __m512 acc = _mm512_add_ps(_mm512_add_ps(a0, a1), _mm512_add_ps(a2, a3));
      if (relu) acc = _mm512_max_ps(acc, zero);
      _mm512_mask_storeu_ps(yr + i, k, acc);
      i += 16;
    }
  }
}

void dense_backward_data_avx512(int rows, int cols, int n, const float* W, const float* dy,
                                float* dx) {
  // Column-major walk keeps the accumulation in registers; dx is touched
  // exactly once per (c, stripe).
  for (int c = 0; c < cols; ++c) {
    float* dxc = dx + static_cast<size_t>(c) * n;
    int i = 0;
    while (i < n) {
      const int rem = n - i;
      const __mmask16 k = rem >= 16 ? static_cast<__mmask16>(0xffff) : tail_mask(rem);
      __m512 a0 = _mm512_setzero_ps(), a1 = a0, a2 = a0, a3 = a0;
      const float* dyi = dy + i;
      int r = 0;
      for (; r + 4 <= rows; r += 4) {
        a0 = _mm512_fmadd_ps(_mm512_set1_ps(W[static_cast<size_t>(r + 0) * cols + c]),
                             _mm512_maskz_loadu_ps(k, dyi + static_cast<size_t>(r + 0) * n), a0);
        a1 = _mm512_fmadd_ps(_mm512_set1_ps(W[static_cast<size_t>(r + 1) * cols + c]),
                             _mm512_maskz_loadu_ps(k, dyi + static_cast<size_t>(r + 1) * n), a1);
        a2 = _mm512_fmadd_ps(_mm512_set1_ps(W[static_cast<size_t>(r + 2) * cols + c]),
                             _mm512_maskz_loadu_ps(k, dyi + static_cast<size_t>(r + 2) * n), a2);
        a3 = _mm512_fmadd_ps(_mm512_set1_ps(W[static_cast<size_t>(r + 3) * cols + c]),
                             _mm512_maskz_loadu_ps(k, dyi + static_cast<size_t>(r + 3) * n), a3);
      }
      for (; r < rows; ++r)
        a0 = _mm512_fmadd_ps(_mm512_set1_ps(W[static_cast<size_t>(r) * cols + c]),
                             _mm512_maskz_loadu_ps(k, dyi + static_cast<size_t>(r) * n), a0);
      __m512 acc = _mm512_add_ps(_mm512_add_ps(a0, a1), _mm512_add_ps(a2, a3));
      acc = _mm512_add_ps(acc, _mm512_maskz_loadu_ps(k, dxc + i));
      _mm512_mask_storeu_ps(dxc + i, k, acc);
      i += 16;
    }
  }
}

void dense_backward_weights_avx512(int rows, int cols, int n, const float* dy, const float* x,
                                   float* dW, float* db) {
  // Transposed copy of x ([n][cols], zero-padded to a multiple of 16 columns)
  // turns the weight gradient into pure vertical FMAs.
  thread_local std::vector<float> xt;
  const int cpad = (cols + 15) & ~15;
  xt.assign(static_cast<size_t>(n) * cpad, 0.0f);
  for (int c = 0; c < cols; ++c) {
    const float* xc = x + static_cast<size_t>(c) * n;
    for (int i = 0; i < n; ++i) xt[static_cast<size_t>(i) * cpad + c] = xc[i];
  }

  for (int r = 0; r < rows; ++r) {
    const float* dyr = dy + static_cast<size_t>(r) * n;
    if (db) {
      __m512 acc = _mm512_setzero_ps();
      int i = 0;
      for (; i + 16 <= n; i += 16) acc = _mm512_add_ps(acc, _mm512_loadu_ps(dyr + i));
      if (i < n) acc = _mm512_add_ps(acc, _mm512_maskz_loadu_ps(tail_mask(n - i), dyr + i));
      db[r] += _mm512_reduce_add_ps(acc);
    }
    float* dwr = dW + static_cast<size_t>(r) * cols;
    for (int cb = 0; cb < cpad; cb += 16) {
      __m512 a0 = _mm512_setzero_ps(), a1 = a0, a2 = a0, a3 = a0;
      int i = 0;
      for (; i + 4 <= n; i += 4) {
        const float* row = xt.data() + static_cast<size_t>(i) * cpad + cb;
        a0 = _mm512_fmadd_ps(_mm512_set1_ps(dyr[i + 0]), _mm512_loadu_ps(row), a0);
        a1 = _mm512_fmadd_ps(_mm512_set1_ps(dyr[i + 1]), _mm512_loadu_ps(row + cpad), a1);
        a2 = _mm512_fmadd_ps(_mm512_set1_ps(dyr[i + 2]), _mm512_loadu_ps(row + 2 * cpad), a2);
        a3 = _mm512_fmadd_ps(_mm512_set1_ps(dyr[i + 3]), _mm512_loadu_ps(row + 3 * cpad), a3);
      }
      for (; i < n; ++i)
        a0 = _mm512_fmadd_ps(_mm512_set1_ps(dyr[i]),
                             _mm512_loadu_ps(xt.data() + static_cast<size_t>(i) * cpad + cb), a0);
      __m512 acc = _mm512_add_ps(_mm512_add_ps(a0, a1), _mm512_add_ps(a2, a3));
      const int rem = cols - cb;
      if (rem >= 16) {
        _mm512_storeu_ps(dwr + cb, _mm512_add_ps(acc, _mm512_loadu_ps(dwr + cb)));
      } else if (rem > 0) {
        __mmask16 k = tail_mask(rem);
        _mm512_mask_storeu_ps(dwr + cb, k,
                              _mm512_add_ps(acc, _mm512_maskz_loadu_ps(k, dwr + cb)));
      }
    }
  }
}

void relu_backward_avx512(size_t m, const float* y, float* dy) {
  const __m512 zero = _mm512_setzero_ps();
  size_t i = 0;
  for (; i + 16 <= m; i += 16) {
    __mmask16 keep = _mm512_cmp_ps_mask(_mm512_loadu_ps(y + i), zero, _CMP_GT_OQ);
    _mm512_storeu_ps(dy + i, _mm512_maskz_mov_ps(keep, _mm512_loadu_ps(dy + i)));
  }
  if (i < m) {
    __mmask16 k = tail_mask(static_cast<int>(m - i));
    __mmask16 keep = _mm512_mask_cmp_ps_mask(k, _mm512_maskz_loadu_ps(k, y + i), zero, _CMP_GT_OQ);
    _mm512_mask_storeu_ps(dy + i, k, _mm512_maskz_mov_ps(keep, _mm512_maskz_loadu_ps(k, dy + i)));
  }
}

void axpy_avx512(size_t m, float a, const float* x, float* y) {
  __m512 av = _mm512_set1_ps(a);
  size_t i = 0;
  for (; i + 16 <= m; i += 16)
    _mm512_storeu_ps(y + i, _mm512_fmadd_ps(av, _mm512_loadu_ps(x + i), _mm512_loadu_ps(y + i)));
  if (i < m) {
    __mmask16 k = tail_mask(static_cast<int>(m - i));
    _mm512_mask_storeu_ps(y + i, k,
                          _mm512_fmadd_ps(av, _mm512_maskz_loadu_ps(k, x + i),
                                          _mm512_maskz_loadu_ps(k, y + i)));
  }
}

float sqnorm_avx512(size_t m, const float* x) {
  __m512 a0 = _mm512_setzero_ps(), a1 = a0;
  size_t i = 0;
  for (; i + 32 <= m; i += 32) {
    __m512 v0 = _mm512_loadu_ps(x + i);
    __m512 v1 = _mm512_loadu_ps(x + i + 16);
    a0 = _mm512_fmadd_ps(v0, v0, a0);
    a1 = _mm512_fmadd_ps(v1, v1, a1);
  }
  for (; i + 16 <= m; i += 16) {
    __m512 v = _mm512_loadu_ps(x + i);
    a0 = _mm512_fmadd_ps(v, v, a0);
  }
  if (i < m) {
    __m512 v = _mm512_maskz_loadu_ps(tail_mask(static_cast<int>(m - i)), x + i);
    a0 = _mm512_fmadd_ps(v, v, a0);
  }
  return _mm512_reduce_add_ps(_mm512_add_ps(a0, a1));
}

void adam_step_avx512(size_t m, float* p, const float* g, float* mom, float* vel, float lr,
                      float beta1, float beta2, float eps, float c1, float c2) {
  const __m512 b1 = _mm512_set1_ps(beta1), b1c = _mm512_set1_ps(1.0f - beta1);
  const __m512 b2 = _mm512_set1_ps(beta2), b2c = _mm512_set1_ps(1.0f - beta2);
  const __m512 lrv = _mm512_set1_ps(lr), epsv = _mm512_set1_ps(eps);
  const __m512 c1v = _mm512_set1_ps(c1), c2v = _mm512_set1_ps(c2);
  auto body = [&](size_t i, __mmask16 k) {
    __m512 gi = _mm512_maskz_loadu_ps(k, g + i);
    __m512 mi = _mm512_fmadd_ps(b1, _mm512_maskz_loadu_ps(k, mom + i), _mm512_mul_ps(b1c, gi));
    __m512 vi = _mm512_fmadd_ps(b2, _mm512_maskz_loadu_ps(k, vel + i),
                                _mm512_mul_ps(b2c, _mm512_mul_ps(gi, gi)));
    _mm512_mask_storeu_ps(mom + i, k, mi);
    _mm512_mask_storeu_ps(vel + i, k, vi);
    __m512 denom = _mm512_add_ps(_mm512_sqrt_ps(_mm512_mul_ps(vi, c2v)), epsv);
    __m512 step = _mm512_div_ps(_mm512_mul_ps(lrv, _mm512_mul_ps(mi, c1v)), denom);
    _mm512_mask_storeu_ps(p + i, k, _mm512_sub_ps(_mm512_maskz_loadu_ps(k, p + i), step));
  };
  size_t i = 0;
  for (; i + 16 <= m; i += 16) body(i, 0xffff);
  if (i < m) body(i, tail_mask(static_cast<int>(m - i)));
}

const Kernels kAvx512 = {
    "avx512",
    &dense_forward_avx512,
    &dense_backward_data_avx512,
    &dense_backward_weights_avx512,
    &relu_backward_avx512,
    &axpy_avx512,
    &sqnorm_avx512,
    &adam_step_avx512,
};

#else
const Kernels kAvx512 = {nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr};
#endif  // __AVX512F__ && __AVX512VL__

}  // namespace

const Kernels& avx512_kernels() { return kAvx512; }

}  // namespace lumi::simd

#endif  // x86-64
