// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

// NEON variants for aarch64 builds.

#include "lumi/simd.h"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace lumi::simd {

namespace {

void dense_forward_neon(int rows, int cols, int n, const float* W, const float* b, const float* x,
                        float* y, bool relu) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  for (int r = 0; r < rows; ++r) {
    const float* wr = W + static_cast<size_t>(r) * cols;
    float* yr = y + static_cast<size_t>(r) * n;
    float bias = b ? b[r] : 0.0f;
    int i = 0;
    for (; i + 4 <= n; i += 4) {
      float32x4_t acc = vdupq_n_f32(bias);
      for (int c = 0; c < cols; ++c)
        acc = vfmaq_n_f32(acc, vld1q_f32(x + static_cast<size_t>(c) * n + i), wr[c]);
      if (relu) acc = vmaxq_f32(acc, zero);
      vst1q_f32(yr + i, acc);
    }
    for (; i < n; ++i) {
      float acc = bias;
      for (int c = 0; c < cols; ++c) acc += wr[c] * x[static_cast<size_t>(c) * n + i];
      yr[i] = relu && acc < 0.0f ? 0.0f : acc;
    }
  }
}

void dense_backward_data_neon(int rows, int cols, int n, const float* W, const float* dy,
                              float* dx) {
  for (int r = 0; r < rows; ++r) {
    const float* wr = W + static_cast<size_t>(r) * cols;
    const float* dyr = dy + static_cast<size_t>(r) * n;
    for (int c = 0; c < cols; ++c) {
      float* dxc = dx + static_cast<size_t>(c) * n;
      int i = 0;
      for (; i + 4 <= n; i += 4)
        vst1q_f32(dxc + i, vfmaq_n_f32(vld1q_f32(dxc + i), vld1q_f32(dyr + i), wr[c]));
      for (; i < n; ++i) dxc[i] += wr[c] * dyr[i];
    }
  }
}

void dense_backward_weights_neon(int rows, int cols, int n, const float* dy, const float* x,
                                 float* dW, float* db) {
  for (int r = 0; r < rows; ++r) {
    const float* dyr = dy + static_cast<size_t>(r) * n;
    if (db) {
      float32x4_t acc = vdupq_n_f32(0.0f);
      int i = 0;
      for (; i + 4 <= n; i += 4) acc = vaddq_f32(acc, vld1q_f32(dyr + i));
      float s = vaddvq_f32(acc);
      for (; i < n; ++i) s += dyr[i];
      db[r] += s;
    }
    float* dwr = dW + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) {
      const float* xc = x + static_cast<size_t>(c) * n;
      float32x4_t acc = vdupq_n_f32(0.0f);
      int i = 0;
      for (; i + 4 <= n; i += 4) acc = vfmaq_f32(acc, vld1q_f32(dyr + i), vld1q_f32(xc + i));
      float s = vaddvq_f32(acc);
      for (; i < n; ++i) s += dyr[i] * xc[i];
      dwr[c] += s;
    }
  }
}

void relu_backward_neon(size_t m, const float* y, float* dy) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    uint32x4_t keep = vcgtq_f32(vld1q_f32(y + i), zero);
    float32x4_t dv = vreinterpretq_f32_u32(
        vandq_u32(vreinterpretq_u32_f32(vld1q_f32(dy + i)), keep));
    vst1q_f32(dy + i, dv);
  }
  for (; i < m; ++i)
    if (y[i] <= 0.0f) dy[i] = 0.0f;
}

void axpy_neon(size_t m, float a, const float* x, float* y) {
  size_t i = 0;
  for (; i + 4 <= m; i += 4)
    vst1q_f32(y + i, vfmaq_n_f32(vld1q_f32(y + i), vld1q_f32(x + i), a));
  for (; i < m; ++i) y[i] += a * x[i];
}

float sqnorm_neon(size_t m, const float* x) {
  float32x4_t acc = vdupq_n_f32(0.0f);
  size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    float32x4_t v = vld1q_f32(x + i);
    acc = vfmaq_f32(acc, v, v);
  }
  float s = vaddvq_f32(acc);
  for (; i < m; ++i) s += x[i] * x[i];
  return s;
}

void adam_step_neon(size_t m, float* p, const float* g, float* mom, float* vel, float lr,
                    float beta1, float beta2, float eps, float c1, float c2) {
  size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    float32x4_t gi = vld1q_f32(g + i);
    float32x4_t mi = vfmaq_n_f32(vmulq_n_f32(gi, 1.0f - beta1), vld1q_f32(mom + i), beta1);
    float32x4_t vi =
        vfmaq_n_f32(vmulq_n_f32(vmulq_f32(gi, gi), 1.0f - beta2), vld1q_f32(vel + i), beta2);
    vst1q_f32(mom + i, mi);
    vst1q_f32(vel + i, vi);
    float32x4_t denom = vaddq_f32(vsqrtq_f32(vmulq_n_f32(vi, c2)), vdupq_n_f32(eps));
    float32x4_t step = vdivq_f32(vmulq_n_f32(vmulq_n_f32(mi, c1), lr), denom);
    vst1q_f32(p + i, vsubq_f32(vld1q_f32(p + i), step));
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

const Kernels kNeon = {
    "neon",
    &dense_forward_neon,
    &dense_backward_data_neon,
    &dense_backward_weights_neon,
    &relu_backward_neon,
    &axpy_neon,
    &sqnorm_neon,
    &adam_step_neon,
};

}  // namespace

const Kernels& neon_kernels() { return kNeon; }

}  // namespace lumi::simd

#endif  // __aarch64__
