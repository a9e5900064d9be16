// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Multi-resolution feature grid: dense storage at coarse levels, spatially
// hashed at fine levels, trilinear interpolation, per-level LOD weights with
// full skipping of zero-weight levels.

#include <cmath>
#include <cstdint>
#include <vector>

#include "lumi/common.h"

namespace lumi {

struct HashGridConfig {
  int levels = 16;
  int features_per_level = 2;
  int base_resolution = 128;
  double per_level_scale = 1.4;
  uint32_t table_size = 1u << 15;  // max entries per level; power of two

  int resolution(int level) const {
    return static_cast<int>(std::floor(base_resolution * std::pow(per_level_scale, level)));
  }
  int feature_dim() const { return levels * features_per_level; }
};

// Optimal continuous LOD for a contracted footprint radius:
// L* = -log_f(2 * s * r), clamped above at levels-1.
double lod_level(double contracted_radius, const HashGridConfig& cfg);

// Piecewise-linear transition weights for effective level L* + bias:
// 1 up to floor, fractional part at the next level, 0 above. Negative
// effective levels keep a small floor weight on level 0 so the encoder
// stays non-degenerate for extreme footprints.
void lod_weights(double l_star, double bias, int levels, float* w);

inline int active_levels(const float* w, int levels) {
  int n = 0;
  for (int i = 0; i < levels; ++i)
    if (w[i] > 0.0f) ++n;
  return n;
}

namespace detail {
// Three-prime XOR hash (iNGP lineage). table_size must be a power of two.
inline uint32_t spatial_hash(uint32_t x, uint32_t y, uint32_t z, uint32_t table_size) {
  return (x * 1u ^ y * 2654435761u ^ z * 805459861u) & (table_size - 1u);
}
}  // namespace detail

template <typename T>
class MultiResHashGrid {
 public:
  explicit MultiResHashGrid(const HashGridConfig& cfg = {}) : cfg_(cfg) {
    level_entries_.resize(cfg.levels);
    level_offset_.resize(cfg.levels);
    level_dense_.resize(cfg.levels);
    size_t offset = 0;
    for (int l = 0; l < cfg.levels; ++l) {
      require(l == 0 || cfg.resolution(l) > cfg.resolution(l - 1),
              "hash grid: resolutions must be strictly increasing");
      uint64_t verts = static_cast<uint64_t>(cfg.resolution(l)) + 1;
      uint64_t dense = verts * verts * verts;
      level_dense_[l] = dense <= cfg.table_size;
      level_entries_[l] = level_dense_[l] ? static_cast<uint32_t>(dense) : cfg.table_size;
      level_offset_[l] = offset;
      offset += static_cast<size_t>(level_entries_[l]) * cfg.features_per_level;
    }
    table_.assign(offset, T(0));
  }

  const HashGridConfig& config() const { return cfg_; }
  size_t parameter_count() const { return table_.size(); }
  T* parameters() { return table_.data(); }
  const T* parameters() const { return table_.data(); }
  bool level_is_dense(int level) const { return level_dense_[level]; }

  void init_random(Rng& rng, double scale = 1e-4) {
    for (auto& v : table_) v = static_cast<T>(rng.uniform(-scale, scale));
  }

  // Contracted point in [-2,2]^3, per-level weights. Writes
  // levels*features_per_level values at the given stride; zero-weight levels
  // are skipped with no table access and produce zeros. A stride equal to
  // the batch size writes one column of a feature-major activation block.
  void encode(const Vec3& contracted, const float* w, T* out, size_t stride = 1) const {
    require(contracted.linf() <= 2.0 + 1e-9, "encode: point outside contracted domain");
    const int fpl = cfg_.features_per_level;
    double u = (contracted.x + 2.0) * 0.25;
    double v = (contracted.y + 2.0) * 0.25;
    double s = (contracted.z + 2.0) * 0.25;
    for (int l = 0; l < cfg_.levels; ++l) {
      T* dst = out + static_cast<size_t>(l) * fpl * stride;
      if (w[l] <= 0.0f) {
        for (int f = 0; f < fpl; ++f) dst[f * stride] = T(0);
        continue;
      }
      Corner c[8];
      T tri[8];
      corners(l, u, v, s, c, tri);
      const T* base = table_.data() + level_offset_[l];
      T acc[8];  // fpl is small (2 in practice, 8 max supported here)
      for (int f = 0; f < fpl; ++f) acc[f] = T(0);
      for (int k = 0; k < 8; ++k) {
        const T* entry = base + static_cast<size_t>(c[k].index) * fpl;
        for (int f = 0; f < fpl; ++f) acc[f] += tri[k] * entry[f];
      }
      for (int f = 0; f < fpl; ++f) dst[f * stride] = acc[f] * static_cast<T>(w[l]);
    }
  }

  // Scatter feature gradients back to table entries (into `grad`, a buffer
  // of parameter_count() values owned by the caller).
  void encode_backward(const Vec3& contracted, const float* w, const T* dfeat, size_t stride,
                       T* grad) const {
    const int fpl = cfg_.features_per_level;
    double u = (contracted.x + 2.0) * 0.25;
    double v = (contracted.y + 2.0) * 0.25;
    double s = (contracted.z + 2.0) * 0.25;
    for (int l = 0; l < cfg_.levels; ++l) {
      if (w[l] <= 0.0f) continue;
      Corner c[8];
      T tri[8];
      corners(l, u, v, s, c, tri);
      const T* dl = dfeat + static_cast<size_t>(l) * fpl * stride;
      T* base = grad + level_offset_[l];
      for (int k = 0; k < 8; ++k) {
        T* entry = base + static_cast<size_t>(c[k].index) * fpl;
        T coeff = tri[k] * static_cast<T>(w[l]);
        for (int f = 0; f < fpl; ++f) entry[f] += coeff * dl[f * stride];
      }
    }
  }

 private:
  struct Corner {
    uint32_t index;
  };

  void corners(int level, double u, double v, double s, Corner* c, T* tri) const {
    const int res = cfg_.resolution(level);
    double pu = clamp(u, 0.0, 1.0) * res;
    double pv = clamp(v, 0.0, 1.0) * res;
    double ps = clamp(s, 0.0, 1.0) * res;
    int iu = std::min(static_cast<int>(pu), res - 1);
    int iv = std::min(static_cast<int>(pv), res - 1);
    int is = std::min(static_cast<int>(ps), res - 1);
    double fu = pu - iu, fv = pv - iv, fs = ps - is;
    const uint32_t verts = static_cast<uint32_t>(res) + 1;
    for (int k = 0; k < 8; ++k) {
      uint32_t x = static_cast<uint32_t>(iu) + (k & 1);
      uint32_t y = static_cast<uint32_t>(iv) + ((k >> 1) & 1);
      uint32_t z = static_cast<uint32_t>(is) + ((k >> 2) & 1);
      if (level_dense_[level])
        c[k].index = (z * verts + y) * verts + x;
      else
        c[k].index = detail::spatial_hash(x, y, z, level_entries_[level]);
      double wu = (k & 1) ? fu : 1.0 - fu;
      double wv = ((k >> 1) & 1) ? fv : 1.0 - fv;
      double ws = ((k >> 2) & 1) ? fs : 1.0 - fs;
      tri[k] = static_cast<T>(wu * wv * ws);
    }
  }

  HashGridConfig cfg_;
  std::vector<T> table_;
  std::vector<uint32_t> level_entries_;
  std::vector<size_t> level_offset_;
  std::vector<uint8_t> level_dense_;
};

}  // namespace lumi
