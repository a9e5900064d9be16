// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Per-ray loss assembly and backpropagation through the compositing chain.
// Templated so the finite-difference checks can run the identical code in
// double precision.

#include "lumi/renderer.h"
#include "lumi/trainer.h"

namespace lumi {

template <typename T>
LossTerms ray_loss(const RayMarchRecord<T>& rec, const TrainRay& ray, double alpha_v,
                   const ContractionSpec& /*contraction*/, const TrainConfig& cfg,
                   bool depth_active, double inv_batch, RayLossGrad* grad) {
  const int n = static_cast<int>(rec.t.size());
  LossTerms loss;
  const double v_raw = 1.0 - alpha_v * ray.vignette_r;
  const double v = std::max(v_raw, 1e-3);

  if (grad) {
    grad->g_w.assign(n, 0.0);
    grad->g_color.assign(static_cast<size_t>(n) * 3, 0.0);
    grad->dpix[0] = grad->dpix[1] = grad->dpix[2] = 0.0;
    grad->d_alpha_v = 0.0;
  }

  // Image loss: L1 in model space, prediction = vignette * composited color.
  double dpix[3] = {0, 0, 0};
  double dv_total = 0;
  for (int c = 0; c < 3; ++c) {
    double pred = v * rec.pixel[c];
    double diff = pred - ray.gt[c];
    loss.image += std::abs(diff) / 3.0 * inv_batch;
    double dpred = inv_batch * (diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0)) / 3.0;
    dpix[c] = dpred * v;
    dv_total += dpred * rec.pixel[c];
  }
  if (grad) {
    grad->dpix[0] = dpix[0];
    grad->dpix[1] = dpix[1];
    grad->dpix[2] = dpix[2];
    if (v_raw > 1e-3) grad->d_alpha_v += dv_total * (-ray.vignette_r);
    for (int i = 0; i < n; ++i) {
      double gw = 0;
      for (int c = 0; c < 3; ++c) {
        double ci = static_cast<double>(rec.color[static_cast<size_t>(i) * 3 + c]);
        gw += dpix[c] * ci;
        grad->g_color[static_cast<size_t>(i) * 3 + c] = dpix[c] * rec.weight[i];
      }
      grad->g_w[i] = gw;
    }
  }

  const double W = rec.opacity;
  const double D = rec.depth;  // already S / (W + eps)
  const double denom = W + 1e-10;

  // Depth supervision inside its window.
  double ddepth = 0;
  if (depth_active && cfg.lambda_depth > 0 && ray.gt_depth >= 0) {
    double diff = D - ray.gt_depth;
    loss.depth = cfg.lambda_depth * std::abs(diff) * inv_batch;
    ddepth = cfg.lambda_depth * inv_batch * (diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0));
  }

  // Depth variance over samples in the inner (uncontracted) region.
  double dvar_dD = 0;
  double Wi = 0, V = 0;
  if (cfg.lambda_dvar > 0) {
    double S2 = 0;
    for (int i = 0; i < n; ++i) {
      if (!rec.inner[i]) continue;
      Wi += rec.weight[i];
      S2 += rec.weight[i] * (rec.t[i] - D) * (rec.t[i] - D);
    }
    if (Wi > 1e-10) {
      V = S2 / Wi;
      loss.dvar = cfg.lambda_dvar * V * inv_batch;
      for (int i = 0; i < n && grad; ++i) {
        if (!rec.inner[i]) continue;
        grad->g_w[i] += cfg.lambda_dvar * inv_batch * ((rec.t[i] - D) * (rec.t[i] - D) - V) / Wi;
        dvar_dD += -2.0 * rec.weight[i] * (rec.t[i] - D) / Wi;
      }
      dvar_dD *= cfg.lambda_dvar * inv_batch;
    }
  }

  // Simplified distortion: pairwise sum w_i w_j |t_i - t_j| via prefix sums.
  if (cfg.lambda_dist > 0) {
    double A = 0, B = 0, val = 0;  // running sum of w and w*t
    for (int i = 0; i < n; ++i) {
      val += rec.weight[i] * (rec.t[i] * A - B);
      A += rec.weight[i];
      B += rec.weight[i] * rec.t[i];
    }
    val *= 2.0;
    loss.dist = cfg.lambda_dist * val * inv_batch;
    if (grad) {
      double A_pre = 0, B_pre = 0;
      for (int i = 0; i < n; ++i) {
        double A_suf = A - A_pre - rec.weight[i];
        double B_suf = B - B_pre - rec.weight[i] * rec.t[i];
        double d = 2.0 * (rec.t[i] * A_pre - B_pre + B_suf - rec.t[i] * A_suf);
        grad->g_w[i] += cfg.lambda_dist * inv_batch * d;
        A_pre += rec.weight[i];
        B_pre += rec.weight[i] * rec.t[i];
      }
    }
  }

  // Depth gradient fans out to every weight: dD/dw_i = (t_i - D) / (W + eps).
  if (grad && (ddepth != 0 || dvar_dD != 0)) {
    double dD_total = ddepth + dvar_dD;
    for (int i = 0; i < n; ++i) grad->g_w[i] += dD_total * (rec.t[i] - D) / denom;
  }

  loss.total = loss.image + loss.depth + loss.dvar + loss.dist;
  return loss;
}

// Backpropagate a finished ray: weight-space gradients -> sigma gradients ->
// field parameters.
template <typename FieldT, typename T = typename FieldT::Scalar>
void backward_ray(const FieldT& field, RayMarchRecord<T>& rec, const RayLossGrad& grad,
                  const double background[3], FieldGradients<T>& grads, std::vector<T>& scratch,
                  std::vector<T>& dcol_scratch) {
  const int n = static_cast<int>(rec.t.size());
  if (n == 0) return;
  // Background enters the prediction through the final transmittance.
  double d_final_trans = 0;
  for (int c = 0; c < 3; ++c) d_final_trans += grad.dpix[c] * background[c];

  rec.dsigma_scratch.resize(n);
  composite_backward_sigma(n, rec.delta.data(), rec.alpha.data(), rec.trans.data(),
                           rec.weight.data(), grad.g_w.data(), rec.final_trans, d_final_trans,
                           rec.dsigma_scratch.data());

  int offset = 0;
  for (int k = 0; k < rec.chunk_count; ++k) {
    FieldChunk<T>& ck = rec.chunks[k];
    dcol_scratch.resize(static_cast<size_t>(3) * ck.n);
    for (int i = 0; i < ck.n; ++i)
      for (int c = 0; c < 3; ++c)
        dcol_scratch[static_cast<size_t>(c) * ck.n + i] =
            static_cast<T>(grad.g_color[static_cast<size_t>(offset + i) * 3 + c]);
    field.backward_chunk(ck, rec.dsigma_scratch.data() + offset, dcol_scratch.data(), grads,
                         scratch);
    offset += ck.n;
  }
}

}  // namespace lumi
