// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Small dense networks evaluated over sample batches. Activations are stored
// feature-major (see simd.h); batches are the samples of one ray chunk.

#include <vector>

#include "lumi/common.h"
#include "lumi/simd.h"

namespace lumi {

// Degree-3 real spherical harmonics basis (16 coefficients) of a unit vector.
template <typename T>
void sh_encode_deg3(const Vec3& d, T* out) {
  const T x = static_cast<T>(d.x), y = static_cast<T>(d.y), z = static_cast<T>(d.z);
  const T xx = x * x, yy = y * y, zz = z * z;
  out[0] = T(0.28209479177387814);
  out[1] = T(-0.48860251190291987) * y;
  out[2] = T(0.48860251190291987) * z;
  out[3] = T(-0.48860251190291987) * x;
  out[4] = T(1.0925484305920792) * x * y;
  out[5] = T(-1.0925484305920792) * y * z;
  out[6] = T(0.31539156525252005) * (T(3) * zz - T(1));
  out[7] = T(-1.0925484305920792) * x * z;
  out[8] = T(0.5462742152960396) * (xx - yy);
  out[9] = T(-0.5900435899266435) * y * (T(3) * xx - yy);
  out[10] = T(2.890611442640554) * x * y * z;
  out[11] = T(-0.4570457994644658) * y * (T(5) * zz - T(1));
  out[12] = T(0.3731763325901154) * z * (T(5) * zz - T(3));
  out[13] = T(-0.4570457994644658) * x * (T(5) * zz - T(1));
  out[14] = T(1.445305721320277) * z * (xx - yy);
  out[15] = T(-0.5900435899266435) * x * (xx - T(3) * yy);
}

// Truncated exponential: exp below the cutoff, linear extension above. Used
// as the density rectifier (always > 0, derivative continuous).
template <typename T>
inline T trunc_exp(T x) {
  const T cutoff = T(10);
  if (x <= cutoff) return std::exp(x);
  return std::exp(cutoff) * (T(1) + (x - cutoff));
}

template <typename T>
inline T trunc_exp_grad(T x) {
  const T cutoff = T(10);
  return std::exp(std::min(x, cutoff));
}

template <typename T>
inline T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

// One dense layer; `relu` applies to the output.
template <typename T>
struct DenseLayer {
  int in = 0, out = 0;
  bool relu = false;
  std::vector<T> weight;  // row-major [out x in]
  std::vector<T> bias;

  DenseLayer() = default;
  DenseLayer(int in_, int out_, bool relu_) : in(in_), out(out_), relu(relu_) {
    weight.assign(static_cast<size_t>(in) * out, T(0));
    bias.assign(out, T(0));
  }

  void init_random(Rng& rng) {
    // He-style fan-in scaling keeps activations in range at 64-wide layers.
    double scale = std::sqrt(2.0 / in);
    for (auto& w : weight) w = static_cast<T>(rng.normal() * scale);
    for (auto& b : bias) b = T(0);
  }

  size_t parameter_count() const { return weight.size() + bias.size(); }
};

// Plain MLP over a batch: x is [in x n], y is [out x n]. The workspace keeps
// every layer's output so the backward pass can replay the chain.
template <typename T>
struct Mlp {
  std::vector<DenseLayer<T>> layers;

  int input_dim() const { return layers.front().in; }
  int output_dim() const { return layers.back().out; }

  size_t parameter_count() const {
    size_t total = 0;
    for (const auto& l : layers) total += l.parameter_count();
    return total;
  }

  void init_random(Rng& rng) {
    for (auto& l : layers) l.init_random(rng);
  }

  // acts must provide layers.size() buffers, acts[k] sized layers[k].out * n.
  void forward(const T* x, int n, std::vector<std::vector<T>>& acts) const {
    acts.resize(layers.size());
    const T* cur = x;
    for (size_t k = 0; k < layers.size(); ++k) {
      const auto& l = layers[k];
      acts[k].resize(static_cast<size_t>(l.out) * n);
      simd::dense_forward<T>(l.out, l.in, n, l.weight.data(), l.bias.data(), cur, acts[k].data(),
                             l.relu);
      cur = acts[k].data();
    }
  }

  // dy is the gradient at the output [out x n]; overwritten during the walk.
  // dx (optional, [in x n]) receives the input gradient; grads accumulates
  // layer gradients in declaration order (weights then bias per layer).
  void backward(const T* x, int n, const std::vector<std::vector<T>>& acts, std::vector<T>& dy,
                T* dx, T* grads, std::vector<T>& scratch) const {
    for (int k = static_cast<int>(layers.size()) - 1; k >= 0; --k) {
      const auto& l = layers[k];
      if (l.relu) simd::relu_backward<T>(static_cast<size_t>(l.out) * n, acts[k].data(), dy.data());
      const T* input = k == 0 ? x : acts[k - 1].data();
      T* gw = grads + layer_offset(k);
      T* gb = gw + static_cast<size_t>(l.out) * l.in;
      simd::dense_backward_weights<T>(l.out, l.in, n, dy.data(), input, gw, gb);
      if (k == 0) {
        if (dx) simd::dense_backward_data<T>(l.out, l.in, n, l.weight.data(), dy.data(), dx);
      } else {
        scratch.assign(static_cast<size_t>(l.in) * n, T(0));
        simd::dense_backward_data<T>(l.out, l.in, n, l.weight.data(), dy.data(), scratch.data());
        dy.swap(scratch);
      }
    }
  }

  size_t layer_offset(int k) const {
    size_t off = 0;
    for (int i = 0; i < k; ++i) off += layers[i].parameter_count();
    return off;
  }

  // Flattened parameter access (weights then bias, layer by layer).
  void copy_params(T* out) const {
    for (const auto& l : layers) {
      std::copy(l.weight.begin(), l.weight.end(), out);
      out += l.weight.size();
      std::copy(l.bias.begin(), l.bias.end(), out);
      out += l.bias.size();
    }
  }
  void set_params(const T* in) {
    for (auto& l : layers) {
      std::copy(in, in + l.weight.size(), l.weight.begin());
      in += l.weight.size();
      std::copy(in, in + l.bias.size(), l.bias.begin());
      in += l.bias.size();
    }
  }
};

}  // namespace lumi
