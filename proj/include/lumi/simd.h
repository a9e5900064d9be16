// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Data-parallel inner loops for the field networks and the optimizer.
//
// Layout convention: activations are stored feature-major, sample-minor.
// An activation block with C features over a batch of n samples is a C*n
// array where row c holds feature c for all n samples. Weights are row-major
// [rows x cols]. This keeps every kernel a unit-stride loop over the sample
// axis, which is the axis the SIMD variants vectorize.
//
// The scalar implementations below are the reference semantics; they are
// templated so tests can instantiate the whole model in double precision for
// finite-difference checks. The AVX2/AVX-512/NEON variants in src/ implement
// the same contracts for float and are selected once at startup (cpuid,
// overridable via LUMI_SIMD=scalar|avx2|avx512). Equivalence of every
// variant against the scalar reference is enforced by tests/test_kernels.

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace lumi::simd {

// ---------------------------------------------------------------------------
// Scalar reference kernels
// ---------------------------------------------------------------------------

namespace scalar {

// y[r*n + i] = sum_c W[r*cols + c] * x[c*n + i] + b[r], optionally ReLU.
template <typename T>
void dense_forward(int rows, int cols, int n, const T* W, const T* b, const T* x, T* y,
                   bool relu) {
  for (int r = 0; r < rows; ++r) {
    T bias = b ? b[r] : T(0);
    T* yr = y + static_cast<size_t>(r) * n;
    for (int i = 0; i < n; ++i) yr[i] = bias;
    const T* wr = W + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) {
      T w = wr[c];
      const T* xc = x + static_cast<size_t>(c) * n;
      for (int i = 0; i < n; ++i) yr[i] += w * xc[i];
    }
    if (relu)
      for (int i = 0; i < n; ++i)
        if (yr[i] < T(0)) yr[i] = T(0);
  }
}

// dx[c*n + i] += sum_r W[r*cols + c] * dy[r*n + i]
template <typename T>
void dense_backward_data(int rows, int cols, int n, const T* W, const T* dy, T* dx) {
  for (int r = 0; r < rows; ++r) {
    const T* wr = W + static_cast<size_t>(r) * cols;
    const T* dyr = dy + static_cast<size_t>(r) * n;
    for (int c = 0; c < cols; ++c) {
      T w = wr[c];
      T* dxc = dx + static_cast<size_t>(c) * n;
      for (int i = 0; i < n; ++i) dxc[i] += w * dyr[i];
    }
  }
}

// dW[r*cols + c] += sum_i dy[r*n + i] * x[c*n + i];  db[r] += sum_i dy[r*n + i]
template <typename T>
void dense_backward_weights(int rows, int cols, int n, const T* dy, const T* x, T* dW, T* db) {
  for (int r = 0; r < rows; ++r) {
    const T* dyr = dy + static_cast<size_t>(r) * n;
    if (db) {
      T acc = T(0);
      for (int i = 0; i < n; ++i) acc += dyr[i];
      db[r] += acc;
    }
    T* dwr = dW + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) {
      const T* xc = x + static_cast<size_t>(c) * n;
      T acc = T(0);
      for (int i = 0; i < n; ++i) acc += dyr[i] * xc[i];
      dwr[c] += acc;
    }
  }
}

// dy[i] = 0 where the forward output y[i] was clamped at zero
template <typename T>
void relu_backward(size_t m, const T* y, T* dy) {
  for (size_t i = 0; i < m; ++i)
    if (y[i] <= T(0)) dy[i] = T(0);
}

template <typename T>
void axpy(size_t m, T a, const T* x, T* y) {
  for (size_t i = 0; i < m; ++i) y[i] += a * x[i];
}

template <typename T>
T sqnorm(size_t m, const T* x) {
  T acc = T(0);
  for (size_t i = 0; i < m; ++i) acc += x[i] * x[i];
  return acc;
}

// Adam update. c1 = 1/(1-beta1^t), c2 = 1/(1-beta2^t) are precomputed by the
// caller so the kernel stays elementwise.
template <typename T>
void adam_step(size_t m, T* p, const T* g, T* mom, T* vel, T lr, T beta1, T beta2, T eps, T c1,
               T c2) {
  for (size_t i = 0; i < m; ++i) {
    T gi = g[i];
    T mi = beta1 * mom[i] + (T(1) - beta1) * gi;
    T vi = beta2 * vel[i] + (T(1) - beta2) * gi * gi;
    mom[i] = mi;
    vel[i] = vi;
    T mhat = mi * c1;
    T vhat = vi * c2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace scalar

// ---------------------------------------------------------------------------
// Runtime dispatch (float only; double always runs the scalar reference)
// ---------------------------------------------------------------------------

struct Kernels {
  const char* name;
  void (*dense_forward)(int rows, int cols, int n, const float* W, const float* b, const float* x,
                        float* y, bool relu);
  void (*dense_backward_data)(int rows, int cols, int n, const float* W, const float* dy,
                              float* dx);
  void (*dense_backward_weights)(int rows, int cols, int n, const float* dy, const float* x,
                                 float* dW, float* db);
  void (*relu_backward)(size_t m, const float* y, float* dy);
  void (*axpy)(size_t m, float a, const float* x, float* y);
  float (*sqnorm)(size_t m, const float* x);
  void (*adam_step)(size_t m, float* p, const float* g, float* mom, float* vel, float lr,
                    float beta1, float beta2, float eps, float c1, float c2);
};

const Kernels& scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
const Kernels& avx2_kernels();    // null-named if not compiled in
const Kernels& avx512_kernels();  // null-named if not compiled in
#endif
#if defined(__aarch64__)
const Kernels& neon_kernels();
#endif

// Active table, chosen once: best supported ISA, or the LUMI_SIMD override.
const Kernels& active();

// All tables compiled in and runnable on this machine (for equivalence tests).
const Kernels* const* available(int* count);

// Thin typed shims so templated model code reads uniformly for both precisions.
template <typename T>
inline void dense_forward(int rows, int cols, int n, const T* W, const T* b, const T* x, T* y,
                          bool relu) {
  scalar::dense_forward(rows, cols, n, W, b, x, y, relu);
}
template <>
inline void dense_forward<float>(int rows, int cols, int n, const float* W, const float* b,
                                 const float* x, float* y, bool relu) {
  active().dense_forward(rows, cols, n, W, b, x, y, relu);
}

template <typename T>
inline void dense_backward_data(int rows, int cols, int n, const T* W, const T* dy, T* dx) {
  scalar::dense_backward_data(rows, cols, n, W, dy, dx);
}
template <>
inline void dense_backward_data<float>(int rows, int cols, int n, const float* W, const float* dy,
                                       float* dx) {
  active().dense_backward_data(rows, cols, n, W, dy, dx);
}

template <typename T>
inline void dense_backward_weights(int rows, int cols, int n, const T* dy, const T* x, T* dW,
                                   T* db) {
  scalar::dense_backward_weights(rows, cols, n, dy, x, dW, db);
}
template <>
inline void dense_backward_weights<float>(int rows, int cols, int n, const float* dy,
                                          const float* x, float* dW, float* db) {
  active().dense_backward_weights(rows, cols, n, dy, x, dW, db);
}

template <typename T>
inline void relu_backward(size_t m, const T* y, T* dy) {
  scalar::relu_backward(m, y, dy);
}
template <>
inline void relu_backward<float>(size_t m, const float* y, float* dy) {
  active().relu_backward(m, y, dy);
}

template <typename T>
inline void axpy(size_t m, T a, const T* x, T* y) {
  scalar::axpy(m, a, x, y);
}
template <>
inline void axpy<float>(size_t m, float a, const float* x, float* y) {
  active().axpy(m, a, x, y);
}

template <typename T>
inline T sqnorm(size_t m, const T* x) {
  return scalar::sqnorm(m, x);
}
template <>
inline float sqnorm<float>(size_t m, const float* x) {
  return active().sqnorm(m, x);
}

template <typename T>
inline void adam_step(size_t m, T* p, const T* g, T* mom, T* vel, T lr, T beta1, T beta2, T eps,
                      T c1, T c2) {
  scalar::adam_step(m, p, g, mom, vel, lr, beta1, beta2, eps, c1, c2);
}
template <>
inline void adam_step<float>(size_t m, float* p, const float* g, float* mom, float* vel, float lr,
                             float beta1, float beta2, float eps, float c1, float c2) {
  active().adam_step(m, p, g, mom, vel, lr, beta1, beta2, eps, c1, c2);
}

}  // namespace lumi::simd
