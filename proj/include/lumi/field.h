// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// The radiance field: hash grid features -> density network (density +
// bottleneck) -> color network over bottleneck + encoded view direction.
// Forward/backward run over sample chunks; everything is templated so tests
// can instantiate the full chain in double precision.

#include <vector>

#include "lumi/grid.h"
#include "lumi/network.h"

namespace lumi {

// PQ-space sigmoid head is the production model; the linear head with a
// truncated-exponential activation exists for the color-space ablation.
enum class ColorSpaceMode { kPq, kLinear };

struct FieldConfig {
  HashGridConfig grid;
  int hidden_width = 64;
  int bottleneck = 16;
  ColorSpaceMode color_space = ColorSpaceMode::kPq;
};

// One evaluated sample chunk with everything the backward pass needs.
template <typename T>
struct FieldChunk {
  int n = 0;
  std::vector<Vec3> pos;            // contracted positions
  std::vector<float> lodw;          // [n x levels]
  std::vector<T> feat;              // [F x n]
  std::vector<std::vector<T>> density_acts;
  std::vector<T> color_in;          // [(bottleneck + 16) x n]
  std::vector<std::vector<T>> color_acts;
  std::vector<T> sigma;             // activated density
  std::vector<T> sigma_raw;
  std::vector<T> color;             // [3 x n] activated
  bool color_evaluated = false;
  // Backward-pass scratch, pooled with the chunk to avoid reallocation.
  std::vector<T> bwd_density_out, bwd_color_raw, bwd_color_in, bwd_feat;
};

template <typename T>
struct FieldGradients {
  std::vector<T> grid;
  std::vector<T> density;
  std::vector<T> color;

  void zero() {
    std::fill(grid.begin(), grid.end(), T(0));
    std::fill(density.begin(), density.end(), T(0));
    std::fill(color.begin(), color.end(), T(0));
  }
  void add(const FieldGradients& o) {
    simd::axpy<T>(grid.size(), T(1), o.grid.data(), grid.data());
    simd::axpy<T>(density.size(), T(1), o.density.data(), density.data());
    simd::axpy<T>(color.size(), T(1), o.color.data(), color.data());
  }
};

template <typename T>
class RadianceField {
 public:
  using Scalar = T;
  static constexpr int kShDim = 16;

  explicit RadianceField(const FieldConfig& cfg = {}) : cfg_(cfg), grid_(cfg.grid) {
    const int f = cfg.grid.feature_dim();
    density_net_.layers = {DenseLayer<T>(f, cfg.hidden_width, true),
                           DenseLayer<T>(cfg.hidden_width, 1 + cfg.bottleneck, false)};
    color_net_.layers = {DenseLayer<T>(cfg.bottleneck + kShDim, cfg.hidden_width, true),
                         DenseLayer<T>(cfg.hidden_width, cfg.hidden_width, true),
                         DenseLayer<T>(cfg.hidden_width, 3, false)};
  }

  const FieldConfig& config() const { return cfg_; }
  MultiResHashGrid<T>& grid() { return grid_; }
  const MultiResHashGrid<T>& grid() const { return grid_; }
  Mlp<T>& density_net() { return density_net_; }
  const Mlp<T>& density_net() const { return density_net_; }
  Mlp<T>& color_net() { return color_net_; }
  const Mlp<T>& color_net() const { return color_net_; }

  void init_random(uint64_t seed) {
    Rng rng(seed);
    grid_.init_random(rng);
    density_net_.init_random(rng);
    color_net_.init_random(rng);
  }

  FieldGradients<T> make_gradients() const {
    FieldGradients<T> g;
    g.grid.assign(grid_.parameter_count(), T(0));
    g.density.assign(density_net_.parameter_count(), T(0));
    g.color.assign(color_net_.parameter_count(), T(0));
    return g;
  }

  // Evaluate a chunk. chunk.pos and chunk.lodw must hold n entries; sh is the
  // encoded view direction shared by the chunk (one ray). When with_color is
  // false only the density head runs (occupancy probes, empty-space loss).
  void forward_chunk(FieldChunk<T>& chunk, const T* sh, bool with_color) const {
    const int n = chunk.n;
    const int f = cfg_.grid.feature_dim();
    const int levels = cfg_.grid.levels;
    chunk.feat.resize(static_cast<size_t>(f) * n);
    for (int i = 0; i < n; ++i)
      grid_.encode(chunk.pos[i], chunk.lodw.data() + static_cast<size_t>(i) * levels,
                   chunk.feat.data() + i, n);
    density_net_.forward(chunk.feat.data(), n, chunk.density_acts);
    const std::vector<T>& dout = chunk.density_acts.back();
    chunk.sigma_raw.assign(dout.begin(), dout.begin() + n);
    chunk.sigma.resize(n);
    for (int i = 0; i < n; ++i) chunk.sigma[i] = trunc_exp(chunk.sigma_raw[i]);
    chunk.color_evaluated = with_color;
    if (!with_color) return;

    const int ci = cfg_.bottleneck + kShDim;
    chunk.color_in.resize(static_cast<size_t>(ci) * n);
    for (int b = 0; b < cfg_.bottleneck; ++b)
      std::copy(dout.begin() + static_cast<size_t>(1 + b) * n,
                dout.begin() + static_cast<size_t>(2 + b) * n,
                chunk.color_in.begin() + static_cast<size_t>(b) * n);
    for (int s = 0; s < kShDim; ++s)
      std::fill(chunk.color_in.begin() + static_cast<size_t>(cfg_.bottleneck + s) * n,
                chunk.color_in.begin() + static_cast<size_t>(cfg_.bottleneck + s + 1) * n, sh[s]);
    color_net_.forward(chunk.color_in.data(), n, chunk.color_acts);
    const std::vector<T>& craw = chunk.color_acts.back();
    chunk.color.resize(static_cast<size_t>(3) * n);
    for (size_t i = 0; i < chunk.color.size(); ++i)
      chunk.color[i] = cfg_.color_space == ColorSpaceMode::kPq ? sigmoid(craw[i])
                                                               : trunc_exp(craw[i]);
  }

  // dsigma is d(loss)/d(activated sigma) [n]; dcolor (may be null when the
  // chunk skipped color) is d(loss)/d(activated color) [3 x n].
  void backward_chunk(FieldChunk<T>& chunk, const T* dsigma, const T* dcolor,
                      FieldGradients<T>& grads, std::vector<T>& scratch) const {
    const int n = chunk.n;
    const int levels = cfg_.grid.levels;
    chunk.bwd_density_out.assign(static_cast<size_t>(1 + cfg_.bottleneck) * n, T(0));

    if (chunk.color_evaluated && dcolor) {
      const std::vector<T>& craw = chunk.color_acts.back();
      chunk.bwd_color_raw.resize(static_cast<size_t>(3) * n);
      for (size_t i = 0; i < chunk.bwd_color_raw.size(); ++i) {
        T g;
        if (cfg_.color_space == ColorSpaceMode::kPq) {
          T c = chunk.color[i];
          g = c * (T(1) - c);
        } else {
          g = trunc_exp_grad(craw[i]);
        }
        chunk.bwd_color_raw[i] = dcolor[i] * g;
      }
      const int ci = cfg_.bottleneck + kShDim;
      chunk.bwd_color_in.assign(static_cast<size_t>(ci) * n, T(0));
      color_net_.backward(chunk.color_in.data(), n, chunk.color_acts, chunk.bwd_color_raw,
                          chunk.bwd_color_in.data(), grads.color.data(), scratch);
      for (int b = 0; b < cfg_.bottleneck; ++b)
        std::copy(chunk.bwd_color_in.begin() + static_cast<size_t>(b) * n,
                  chunk.bwd_color_in.begin() + static_cast<size_t>(b + 1) * n,
                  chunk.bwd_density_out.begin() + static_cast<size_t>(1 + b) * n);
    }
    for (int i = 0; i < n; ++i)
      chunk.bwd_density_out[i] = dsigma[i] * trunc_exp_grad(chunk.sigma_raw[i]);

    const int f = cfg_.grid.feature_dim();
    chunk.bwd_feat.assign(static_cast<size_t>(f) * n, T(0));
    density_net_.backward(chunk.feat.data(), n, chunk.density_acts, chunk.bwd_density_out,
                          chunk.bwd_feat.data(), grads.density.data(), scratch);
    for (int i = 0; i < n; ++i)
      grid_.encode_backward(chunk.pos[i], chunk.lodw.data() + static_cast<size_t>(i) * levels,
                            chunk.bwd_feat.data() + i, n, grads.grid.data());
  }

  // Density at a single contracted point with all-ones LOD weights.
  T density_at(const Vec3& contracted) const {
    FieldChunk<T> chunk;
    chunk.n = 1;
    chunk.pos = {contracted};
    chunk.lodw.assign(cfg_.grid.levels, 1.0f);
    forward_chunk(chunk, nullptr, false);
    return chunk.sigma[0];
  }

  void apply_gradients_sgd(const FieldGradients<T>& g, T lr) {
    // Test hook; training uses the Adam path in the trainer.
    simd::axpy<T>(g.grid.size(), -lr, g.grid.data(), grid_.parameters());
    std::vector<T> p(density_net_.parameter_count());
    density_net_.copy_params(p.data());
    simd::axpy<T>(p.size(), -lr, g.density.data(), p.data());
    density_net_.set_params(p.data());
    p.resize(color_net_.parameter_count());
    color_net_.copy_params(p.data());
    simd::axpy<T>(p.size(), -lr, g.color.data(), p.data());
    color_net_.set_params(p.data());
  }

 private:
  FieldConfig cfg_;
  MultiResHashGrid<T> grid_;
  Mlp<T> density_net_;
  Mlp<T> color_net_;
};

// Normalized negative density gradient by central differences. Returns false
// (invalid) when the gradient is numerically zero.
template <typename DensityFn>
bool estimate_normal(const DensityFn& density, const Vec3& x, Vec3* normal, double h = 1e-3) {
  Vec3 g{(density(Vec3{x.x + h, x.y, x.z}) - density(Vec3{x.x - h, x.y, x.z})) / (2 * h),
         (density(Vec3{x.x, x.y + h, x.z}) - density(Vec3{x.x, x.y - h, x.z})) / (2 * h),
         (density(Vec3{x.x, x.y, x.z + h}) - density(Vec3{x.x, x.y, x.z - h})) / (2 * h)};
  double n = g.norm();
  if (!(n > 1e-12)) return false;
  *normal = g / -n;
  return true;
}

}  // namespace lumi
