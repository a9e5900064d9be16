// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// End-to-end optimization: weighted pixel sampling, PQ-space loss assembly,
// Adam bookkeeping and the pruning/depth-loss schedules.

#include <functional>
#include <string>
#include <vector>

#include "lumi/renderer.h"
#include "lumi/scene.h"

namespace lumi {

struct TrainConfig {
  int iterations = 20000;
  int rays_per_image = 256;
  int images_per_batch = 50;  // capped at the number of training images

  double lr_grid = 0.01;
  double lr_net = 0.005;  // networks and vignetting
  double beta1 = 0.9, beta2 = 0.99;
  double adam_eps = 1e-15;

  int samples_per_ray = 256;
  double termination_transmittance = 1e-4;

  double lambda_depth = 0.1;
  double lambda_dvar = 0.01;
  double lambda_dist = 0.001;
  double lambda_empty = 0.01;
  double lambda_wd = 1e-6;
  double depth_window_frac = 0.025;  // early-stage depth supervision window
  int empty_samples = 128;
  double empty_radius = 1.0;

  // Pruning schedule, fractions of total iterations.
  double prune_start_frac = 0.4;
  double prune_every_frac = 0.01;
  double probe_every_frac = 0.1;
  std::vector<double> upsample_milestones = {0.6, 0.8};
  int occupancy_resolution = 64;
  int probe_points_per_axis = 4;  // halved (min 1) at each upsample
  float prune_alpha_max = 0.2f;

  // Optional coarse-to-fine LOD bias anneal (start value ramps to 0).
  bool lod_anneal = false;
  double lod_anneal_start = -5.0;
  double lod_anneal_end_frac = 0.5;

  // Weighted sampling (Laplacian pyramid; 4:1 above/below the 75th
  // percentile, footprint-corrected).
  bool weighted_sampling = true;
  double weight_high = 4.0;
  double weight_low = 1.0;

  FieldConfig field;
  uint64_t seed = 1;
  int validate_every = 0;  // 0 -> ten validations across the run
  bool grad_selfcheck = true;
  std::string metrics_csv;  // empty = no csv
};

struct PixelWeightMap {
  int width = 0, height = 0;
  std::vector<double> weight;  // normalized to sum 1
  std::vector<double> cdf;     // prefix sums for sampling
};

// Importance from the max over Laplacian-pyramid levels, thresholded at the
// 75th percentile, footprint-corrected, normalized. Constant images fall
// back to a uniform map.
PixelWeightMap build_pixel_weights(const Image<float>& luminance, const CameraModel& cam,
                                   double w_high = 4.0, double w_low = 1.0);

struct TrainRay {
  int camera = 0;  // index into dataset cameras
  int px = 0, py = 0;
  Ray ray, neighbor;
  float gt[3] = {0, 0, 0};   // model-space target (PQ or linear)
  double gt_depth = -1;      // <0 = unavailable
  double vignette_r = 0;     // normalized radius for the vignette model
};

// 256 rays from each of min(50, available) images, drawn without replacement
// across images and by pixel weight within each image. Deterministic for a
// given rng state.
std::vector<TrainRay> sample_batch(const SceneDataset& ds,
                                   const std::vector<Image<float>>& model_space_images,
                                   const std::vector<PixelWeightMap>& weights,
                                   const TrainConfig& cfg, Rng& rng);

struct LossTerms {
  double total = 0;
  double image = 0, depth = 0, dvar = 0, dist = 0, empty = 0, wd = 0;
};

// Per-ray loss pieces on a finished march; gradients for the compositing
// chain are produced alongside (d/dw per sample plus d/dcolor). Exposed for
// tests; train() uses it internally.
struct RayLossGrad {
  std::vector<double> g_w;      // dL/dw_i
  std::vector<double> g_color;  // dL/dc (3 per sample, sample-major)
  double dpix[3] = {0, 0, 0};   // dL/d(composited color), vignette included
  double d_alpha_v = 0;
};

template <typename T>
LossTerms ray_loss(const RayMarchRecord<T>& rec, const TrainRay& ray, double alpha_v,
                   const ContractionSpec& contraction, const TrainConfig& cfg, bool depth_active,
                   double inv_batch, RayLossGrad* grad);

struct EvalResult {
  double psnr_srgb = 0, psnr_pq = 0;
  double ssim_srgb = 0, ssim_pq = 0;
};

// Held-out metrics in tonemapped sRGB and in PQ space.
EvalResult evaluate(const Checkpoint& ck, const SceneDataset& ds);

EvalResult evaluate_images(const Image<float>& pred_pq, const Image<float>& gt_pq);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossTerms> losses;      // one per iteration
  std::vector<EvalResult> validations;
  std::vector<int> validation_iters;
};

// Runs the full loop: sample, march, loss, backprop, Adam, history
// recording, scheduled probing/pruning/upsampling, periodic validation.
// Aborts on non-finite loss.
TrainResult train(const SceneDataset& ds, const TrainConfig& cfg);

// Central finite-difference check of every learnable parameter group on a
// miniature double-precision instantiation. Returns the worst relative
// error; train() runs it as a pre-flight check.
double gradient_selfcheck(uint64_t seed);

}  // namespace lumi
