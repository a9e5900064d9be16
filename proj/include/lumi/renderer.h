// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Occupancy-aware ray marching with emission-absorption compositing in PQ
// space. The march evaluates the field in sample chunks so the dense layers
// run over batches; contributions stop once transmittance drops below the
// termination threshold, independent of chunk boundaries.

#include <chrono>
#include <cstdint>
#include <vector>

#include "lumi/camera.h"
#include "lumi/field.h"
#include "lumi/image.h"
#include "lumi/occupancy.h"

namespace lumi {

struct RenderOptions {
  int samples_per_ray = 256;
  double lod_bias = 0.0;
  bool lod_enabled = true;
  double termination_transmittance = 1e-4;  // 0 disables early cut
  double background[3] = {0, 0, 0};         // model-space (PQ) background
  ContractionSpec contraction;
  int chunk_size = 32;
};

// Samples of one ray after marching. For training runs (record = true) the
// field chunks stay alive for the backward pass.
template <typename T>
struct RayMarchRecord {
  std::vector<double> t, delta;
  std::vector<T> sigma;
  std::vector<T> color;        // 3 per sample, sample-major
  std::vector<double> alpha, trans, weight;  // trans[i] is T before sample i
  std::vector<uint8_t> inner;                // sample lies in the identity region
  std::vector<double> ts_scratch;            // reused exponential distances
  std::vector<T> dsigma_scratch;             // reused by the backward pass
  std::vector<FieldChunk<T>> chunks;         // pooled; only [0, chunk_count) live
  int chunk_count = 0;
  int contributing = 0;        // samples before the termination cut
  double pixel[3] = {0, 0, 0};
  double depth = 0;
  double opacity = 0;
  double final_trans = 1;
  int evals = 0;

  void clear() {
    t.clear();
    delta.clear();
    sigma.clear();
    color.clear();
    alpha.clear();
    trans.clear();
    weight.clear();
    inner.clear();
    chunk_count = 0;  // chunk buffers stay allocated for reuse
    contributing = 0;
    pixel[0] = pixel[1] = pixel[2] = 0;
    depth = opacity = 0;
    final_trans = 1;
    evals = 0;
  }

  FieldChunk<T>& push_chunk() {
    if (static_cast<size_t>(chunk_count) == chunks.size()) chunks.emplace_back();
    FieldChunk<T>& c = chunks[chunk_count++];
    c.n = 0;
    c.pos.clear();
    c.lodw.clear();
    return c;
  }
};

// Spec-level sample batch for the standalone compositing operation.
template <typename T>
struct RaySampleBatch {
  std::vector<double> t;      // strictly increasing
  std::vector<double> delta;  // step sizes
  std::vector<T> sigma;
  std::vector<T> color;  // 3 per sample
};

// Plain emission-absorption quadrature: w_i = T_i (1 - exp(-sigma_i dt_i)).
// Returns the composited color; opacity_out gets the weight sum.
template <typename T>
void composite(const RaySampleBatch<T>& batch, double out_color[3], double* opacity_out) {
  const size_t n = batch.t.size();
  for (size_t i = 1; i < n; ++i)
    require(batch.t[i] > batch.t[i - 1], "composite: distances must be increasing");
  double trans = 1.0;
  out_color[0] = out_color[1] = out_color[2] = 0.0;
  double opacity = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double a = 1.0 - std::exp(-static_cast<double>(batch.sigma[i]) * batch.delta[i]);
    double w = trans * a;
    for (int c = 0; c < 3; ++c) out_color[c] += w * static_cast<double>(batch.color[i * 3 + c]);
    opacity += w;
    trans *= 1.0 - a;
  }
  if (opacity_out) *opacity_out = opacity;
}

// dL/dsigma_i from per-sample dL/dw (g) plus dL/d(final transmittance).
// Reverse suffix scan over the recorded quantities; O(n).
template <typename T>
void composite_backward_sigma(int n, const double* delta, const double* alpha,
                              const double* trans, const double* weight, const double* g,
                              double final_trans, double d_final_trans, T* dsigma) {
  double suffix = d_final_trans * final_trans;
  for (int i = n - 1; i >= 0; --i) {
    double d = delta[i] * ((1.0 - alpha[i]) * g[i] * trans[i] - suffix);
    dsigma[i] = static_cast<T>(d);
    suffix += g[i] * weight[i];
  }
}

// March one ray. `neighbor` is the adjacent-pixel ray used for contracted
// footprints. Appends kept samples to `rec` (cleared first). FieldT needs
// Scalar, kShDim, config() and forward_chunk(); tests march analytic fields
// through the same code path.
template <typename FieldT, typename T = typename FieldT::Scalar>
void march_ray(const FieldT& field, const OccupancyGrid& grid, const Ray& ray,
               const Ray& neighbor, double t_near, double t_far, const RenderOptions& opts,
               bool record, RayMarchRecord<T>& rec) {
  rec.clear();
  const auto& cfg = field.config().grid;
  const int levels = cfg.levels;
  const int n = opts.samples_per_ray;
  require(t_near > 0 && t_far > t_near && n >= 2, "march_ray: bad sampling interval");
  std::vector<double>& ts = rec.ts_scratch;
  ts.resize(n);
  const double log_ratio = std::log(t_far / t_near);
  for (int i = 0; i < n; ++i)
    ts[i] = t_near * std::exp(log_ratio * (static_cast<double>(i) / (n - 1)));
  ts[0] = t_near;
  ts[n - 1] = t_far;
  const double ratio = std::pow(t_far / t_near, 1.0 / (n - 1));

  T sh[FieldT::kShDim];
  sh_encode_deg3(ray.dir, sh);

  // Rendering reuses one pooled chunk; recorded (training) marches keep one
  // per flush so the backward pass can replay them.
  auto new_chunk = [&]() -> FieldChunk<T>& {
    if (!record && rec.chunk_count > 0) {
      FieldChunk<T>& c = rec.chunks[0];
      c.n = 0;
      c.pos.clear();
      c.lodw.clear();
      rec.chunk_count = 1;
      return c;
    }
    return rec.push_chunk();
  };
  FieldChunk<T>* chunk = nullptr;

  double trans = 1.0;
  bool terminated = false;

  auto flush = [&](FieldChunk<T>& ck) {
    if (ck.n == 0) return;
    field.forward_chunk(ck, sh, true);
    rec.evals += ck.n;
    size_t base = rec.sigma.size();  // t/delta run ck.n entries ahead
    for (int i = 0; i < ck.n; ++i) {
      size_t s = base + i;
      double sigma = static_cast<double>(ck.sigma[i]);
      double a = 1.0 - std::exp(-sigma * rec.delta[s]);
      double w = trans * a;
      rec.sigma.push_back(ck.sigma[i]);
      for (int c = 0; c < 3; ++c) rec.color.push_back(ck.color[static_cast<size_t>(c) * ck.n + i]);
      rec.alpha.push_back(a);
      rec.trans.push_back(trans);
      rec.weight.push_back(w);
      for (int c = 0; c < 3; ++c)
        rec.pixel[c] += w * static_cast<double>(ck.color[static_cast<size_t>(c) * ck.n + i]);
      rec.depth += w * rec.t[s];
      rec.opacity += w;
      trans *= 1.0 - a;
      ++rec.contributing;
      if (opts.termination_transmittance > 0 && trans < opts.termination_transmittance) {
        terminated = true;
        break;
      }
    }
    // Keep the bookkeeping arrays aligned with evaluated samples even when
    // the cut landed mid-chunk; the tail contributes nothing.
    while (rec.sigma.size() < rec.t.size()) {
      size_t s = rec.sigma.size();
      size_t i = s - base;
      rec.sigma.push_back(ck.sigma[i]);
      for (int c = 0; c < 3; ++c) rec.color.push_back(ck.color[static_cast<size_t>(c) * ck.n + i]);
      rec.alpha.push_back(0.0);
      rec.trans.push_back(0.0);
      rec.weight.push_back(0.0);
    }
  };

  chunk = &new_chunk();
  for (int i = 0; i < n && !terminated; ++i) {
    Vec3 pos = ray.at(ts[i]);
    Vec3 c = contract(pos, opts.contraction);
    if (!grid.is_occupied(c)) continue;
    double delta = (i + 1 < n) ? ts[i + 1] - ts[i] : ts[i] * (ratio - 1.0);
    float* w;
    chunk->pos.push_back(c);
    chunk->lodw.resize(chunk->lodw.size() + levels);
    w = chunk->lodw.data() + chunk->lodw.size() - levels;
    if (opts.lod_enabled) {
      double r_c = contracted_footprint(ray, neighbor, ts[i], opts.contraction);
      double l_star = lod_level(std::max(r_c, 1e-12), cfg);
      lod_weights(l_star, opts.lod_bias, levels, w);
    } else {
      for (int l = 0; l < levels; ++l) w[l] = 1.0f;
    }
    chunk->n++;
    rec.t.push_back(ts[i]);
    rec.delta.push_back(delta);
    rec.inner.push_back(c.linf() <= 1.0 ? 1 : 0);
    if (chunk->n >= opts.chunk_size) {
      flush(*chunk);
      if (!terminated) chunk = &new_chunk();
    }
  }
  if (!terminated) flush(*chunk);
  if (rec.chunk_count > 0 && rec.chunks[rec.chunk_count - 1].n == 0) --rec.chunk_count;

  rec.final_trans = trans;
  for (int c = 0; c < 3; ++c) rec.pixel[c] += trans * opts.background[c];
  // Smooth normalization keeps the depth differentiable at zero opacity.
  rec.depth = rec.depth / (rec.opacity + 1e-10);
}

// Per-row diagnostics emitted by render_rows for the scheduler and the
// bench tooling.
struct RowStats {
  int row = 0;
  double ms = 0;
  int64_t rays = 0;
  int64_t evals = 0;
};

// Renders rows [row_begin, row_end) of the camera's image into `out`
// (PQ-space, 3 channels, full image dimensions). Optional depth/opacity
// planes. Deterministic for fixed inputs regardless of how rows are split
// across workers.
template <typename FieldT, typename T = typename FieldT::Scalar>
void render_rows(const FieldT& field, const OccupancyGrid& grid,
                 const CameraModel& cam, const RenderOptions& opts, int row_begin, int row_end,
                 Image<float>* out, Image<float>* depth_out, Image<float>* opacity_out,
                 std::vector<RowStats>* stats) {
  require(row_begin >= 0 && row_end <= cam.height && row_begin <= row_end,
          "render_rows: row range outside image");
  RayMarchRecord<T> rec;
  for (int y = row_begin; y < row_end; ++y) {
    auto start = std::chrono::steady_clock::now();
    int64_t evals = 0;
    for (int x = 0; x < cam.width; ++x) {
      Ray ray = generate_ray(cam, x + 0.5, y + 0.5);
      Ray neighbor = generate_ray_unchecked(cam, x + 1.5, y + 0.5);
      march_ray(field, grid, ray, neighbor, cam.t_near, cam.t_far, opts, false, rec);
      for (int c = 0; c < 3; ++c) out->at(x, y, c) = static_cast<float>(rec.pixel[c]);
      if (depth_out) depth_out->at(x, y, 0) = static_cast<float>(rec.depth);
      if (opacity_out) opacity_out->at(x, y, 0) = static_cast<float>(rec.opacity);
      evals += rec.evals;
    }
    if (stats) {
      double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                      .count();
      stats->push_back({y, ms, cam.width, evals});
    }
  }
}

}  // namespace lumi
