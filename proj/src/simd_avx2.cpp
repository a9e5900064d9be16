// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

// AVX2+FMA variants of the float kernels. Compiled only when the toolchain
// targets x86-64; selected at runtime by simd_dispatch.cpp.

#include "lumi/simd.h"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace lumi::simd {

namespace {

#if defined(__AVX2__) && defined(__FMA__)

void dense_forward_avx2(int rows, int cols, int n, const float* W, const float* b, const float* x,
                        float* y, bool relu) {
  const __m256 zero = _mm256_setzero_ps();
  for (int r = 0; r < rows; ++r) {
    const float* wr = W + static_cast<size_t>(r) * cols;
    float* yr = y + static_cast<size_t>(r) * n;
    float bias = b ? b[r] : 0.0f;
    int i = 0;
    for (; i + 8 <= n; i += 8) {
      __m256 acc = _mm256_set1_ps(bias);
      for (int c = 0; c < cols; ++c) {
        __m256 w = _mm256_set1_ps(wr[c]);
        __m256 xv = _mm256_loadu_ps(x + static_cast<size_t>(c) * n + i);
        acc = _mm256_fmadd_ps(w, xv, acc);
      }
      if (relu) acc = _mm256_max_ps(acc, zero);
      _mm256_storeu_ps(yr + i, acc);
    }
    for (; i < n; ++i) {
      float acc = bias;
      for (int c = 0; c < cols; ++c) acc += wr[c] * x[static_cast<size_t>(c) * n + i];
      yr[i] = relu && acc < 0.0f ? 0.0f : acc;
    }
  }
}

void dense_backward_data_avx2(int rows, int cols, int n, const float* W, const float* dy,
                              float* dx) {
  for (int r = 0; r < rows; ++r) {
    const float* wr = W + static_cast<size_t>(r) * cols;
    const float* dyr = dy + static_cast<size_t>(r) * n;
    for (int c = 0; c < cols; ++c) {
      __m256 w = _mm256_set1_ps(wr[c]);
      float* dxc = dx + static_cast<size_t>(c) * n;
      int i = 0;
      for (; i + 8 <= n; i += 8) {
        __m256 acc = _mm256_loadu_ps(dxc + i);
        acc = _mm256_fmadd_ps(w, _mm256_loadu_ps(dyr + i), acc);
        _mm256_storeu_ps(dxc + i, acc);
      }
      for (; i < n; ++i) dxc[i] += wr[c] * dyr[i];
    }
  }
}

float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_hadd_ps(lo, lo);
  lo = _mm_hadd_ps(lo, lo);
  return _mm_cvtss_f32(lo);
}

void dense_backward_weights_avx2(int rows, int cols, int n, const float* dy, const float* x,
                                 float* dW, float* db) {
  for (int r = 0; r < rows; ++r) {
    const float* dyr = dy + static_cast<size_t>(r) * n;
    if (db) {
      __m256 acc = _mm256_setzero_ps();
      int i = 0;
      for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(dyr + i));
      float s = hsum(acc);
      for (; i < n; ++i) s += dyr[i];
      db[r] += s;
    }
    float* dwr = dW + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) {
      const float* xc = x + static_cast<size_t>(c) * n;
      __m256 acc = _mm256_setzero_ps();
      int i = 0;
      for (; i + 8 <= n; i += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(dyr + i), _mm256_loadu_ps(xc + i), acc);
      float s = hsum(acc);
      for (; i < n; ++i) s += dyr[i] * xc[i];
      dwr[c] += s;
    }
  }
}

void relu_backward_avx2(size_t m, const float* y, float* dy) {
  const __m256 zero = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= m; i += 8) {
    __m256 yv = _mm256_loadu_ps(y + i);
    __m256 mask = _mm256_cmp_ps(yv, zero, _CMP_GT_OQ);
    __m256 dv = _mm256_and_ps(_mm256_loadu_ps(dy + i), mask);
    _mm256_storeu_ps(dy + i, dv);
  }
  for (; i < m; ++i)
    if (y[i] <= 0.0f) dy[i] = 0.0f;
}

void axpy_avx2(size_t m, float a, const float* x, float* y) {
  __m256 av = _mm256_set1_ps(a);
  size_t i = 0;
  for (; i + 8 <= m; i += 8) {
    __m256 acc = _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i));
    _mm256_storeu_ps(y + i, acc);
  }
  for (; i < m; ++i) y[i] += a * x[i];
}

float sqnorm_avx2(size_t m, const float* x) {
  __m256 acc = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= m; i += 8) {
    __m256 v = _mm256_loadu_ps(x + i);
    acc = _mm256_fmadd_ps(v, v, acc);
  }
  float s = hsum(acc);
  for (; i < m; ++i) s += x[i] * x[i];
  return s;
}

void adam_step_avx2(size_t m, float* p, const float* g, float* mom, float* vel, float lr,
                    float beta1, float beta2, float eps, float c1, float c2) {
  const __m256 b1 = _mm256_set1_ps(beta1), b1c = _mm256_set1_ps(1.0f - beta1);
  const __m256 b2 = _mm256_set1_ps(beta2), b2c = _mm256_set1_ps(1.0f - beta2);
  const __m256 lrv = _mm256_set1_ps(lr), epsv = _mm256_set1_ps(eps);
  const __m256 c1v = _mm256_set1_ps(c1), c2v = _mm256_set1_ps(c2);
  size_t i = 0;
  for (; i + 8 <= m; i += 8) {
    __m256 gi = _mm256_loadu_ps(g + i);
    __m256 mi = _mm256_fmadd_ps(b1, _mm256_loadu_ps(mom + i), _mm256_mul_ps(b1c, gi));
    __m256 vi = _mm256_fmadd_ps(b2, _mm256_loadu_ps(vel + i),
                                _mm256_mul_ps(b2c, _mm256_mul_ps(gi, gi)));
    _mm256_storeu_ps(mom + i, mi);
    _mm256_storeu_ps(vel + i, vi);
    __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(_mm256_mul_ps(vi, c2v)), epsv);
    __m256 step = _mm256_div_ps(_mm256_mul_ps(lrv, _mm256_mul_ps(mi, c1v)), denom);
    _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), step));
  }
  for (; i < m; ++i) {
    float gi = g[i];
    float mi = beta1 * mom[i] + (1.0f - beta1) * gi;
    float vi = beta2 * vel[i] + (1.0f - beta2) * gi * gi;
    mom[i] = mi;
    vel[i] = vi;
    p[i] -= lr * (mi * c1) / (std::sqrt(vi * c2) + eps);
  }
}

const Kernels kAvx2 = {
    "avx2",
    &dense_forward_avx2,
    &dense_backward_data_avx2,
    &dense_backward_weights_avx2,
    &relu_backward_avx2,
    &axpy_avx2,
    &sqnorm_avx2,
    &adam_step_avx2,
};

#else
const Kernels kAvx2 = {nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr};
#endif  // __AVX2__ && __FMA__

}  // namespace

const Kernels& avx2_kernels() { return kAvx2; }

}  // namespace lumi::simd

#endif  // x86-64
