// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#include "lumi/trainer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "lumi/train_step.h"

namespace lumi {

// ---------------------------------------------------------------------------
// Weighted sampling (Laplacian pyramid)
// ---------------------------------------------------------------------------

namespace {

Image<float> downsample2(const Image<float>& in) {
  int w = std::max(1, in.width / 2), h = std::max(1, in.height / 2);
  Image<float> out(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      int cnt = 0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          int sx = std::min(2 * x + dx, in.width - 1);
          int sy = std::min(2 * y + dy, in.height - 1);
          acc += in.at(sx, sy, 0);
          ++cnt;
        }
      out.at(x, y, 0) = static_cast<float>(acc / cnt);
    }
  return out;
}

Image<float> blur5(const Image<float>& in) {
  static const double k[5] = {1 / 16.0, 4 / 16.0, 6 / 16.0, 4 / 16.0, 1 / 16.0};
  Image<float> tmp(in.width, in.height, 1), out(in.width, in.height, 1);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      double acc = 0;
      for (int i = -2; i <= 2; ++i) acc += k[i + 2] * in.at(clamp(x + i, 0, in.width - 1), y, 0);
      tmp.at(x, y, 0) = static_cast<float>(acc);
    }
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x) {
      double acc = 0;
      for (int i = -2; i <= 2; ++i) acc += k[i + 2] * tmp.at(x, clamp(y + i, 0, in.height - 1), 0);
      out.at(x, y, 0) = static_cast<float>(acc);
    }
  return out;
}

}  // namespace

PixelWeightMap build_pixel_weights(const Image<float>& luminance, const CameraModel& cam,
                                   double w_high, double w_low) {
  require(luminance.channels == 1, "pixel weights: single-channel image expected");
  const int w = luminance.width, h = luminance.height;
  PixelWeightMap map;
  map.width = w;
  map.height = h;

  // Max |Laplacian| across pyramid levels, upsampled to full resolution by
  // nearest lookup.
  std::vector<double> importance(static_cast<size_t>(w) * h, 0.0);
  Image<float> level = luminance;
  int scale = 1;
  while (level.width >= 8 && level.height >= 8) {
    Image<float> blurred = blur5(level);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int lx = std::min(x / scale, level.width - 1);
        int ly = std::min(y / scale, level.height - 1);
        double lap = static_cast<double>(level.at(lx, ly, 0)) - blurred.at(lx, ly, 0);
        auto& imp = importance[static_cast<size_t>(y) * w + x];
        imp = std::max(imp, std::abs(lap));
      }
    level = downsample2(blurred);
    scale *= 2;
  }

  double max_imp = *std::max_element(importance.begin(), importance.end());
  map.weight.assign(importance.size(), 1.0);
  if (max_imp > 1e-12) {
    std::vector<double> sorted = importance;
    std::sort(sorted.begin(), sorted.end());
    double p75 = sorted[static_cast<size_t>(0.75 * (sorted.size() - 1))];
    for (size_t i = 0; i < importance.size(); ++i)
      map.weight[i] = importance[i] > p75 ? w_high : w_low;
    // Perspective falloff: sampling weight inverse to the pixel footprint.
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        Ray a = generate_ray_unchecked(cam, x + 0.5, y + 0.5);
        Ray b = generate_ray_unchecked(cam, x + 1.5, y + 0.5);
        double r = 0.5 * (a.dir - b.dir).norm();
        map.weight[static_cast<size_t>(y) * w + x] /= std::max(r, 1e-9);
      }
  }
  double sum = std::accumulate(map.weight.begin(), map.weight.end(), 0.0);
  for (auto& v : map.weight) v /= sum;
  map.cdf.resize(map.weight.size());
  double acc = 0;
  for (size_t i = 0; i < map.weight.size(); ++i) {
    acc += map.weight[i];
    map.cdf[i] = acc;
  }
  map.cdf.back() = 1.0;
  return map;
}

// ---------------------------------------------------------------------------
// Batch sampling
// ---------------------------------------------------------------------------

std::vector<TrainRay> sample_batch(const SceneDataset& ds,
                                   const std::vector<Image<float>>& model_images,
                                   const std::vector<PixelWeightMap>& weights,
                                   const TrainConfig& cfg, Rng& rng) {
  require(!ds.train_cameras.empty(), "sample_batch: empty dataset");
  const int avail = static_cast<int>(ds.train_cameras.size());
  const int pick = std::min(cfg.images_per_batch, avail);

  // Uniform without replacement (partial Fisher-Yates).
  std::vector<int> order(ds.train_cameras);
  for (int i = 0; i < pick; ++i) {
    int j = i + static_cast<int>(rng.next_below(static_cast<uint32_t>(avail - i)));
    std::swap(order[i], order[j]);
  }

  std::vector<TrainRay> batch;
  batch.reserve(static_cast<size_t>(pick) * cfg.rays_per_image);
  for (int k = 0; k < pick; ++k) {
    int ci = order[k];
    const CameraModel& cam = ds.manifest.cameras[ci];
    const PixelWeightMap& map = weights[ci];
    for (int r = 0; r < cfg.rays_per_image; ++r) {
      double u = rng.uniform();
      size_t idx = std::lower_bound(map.cdf.begin(), map.cdf.end(), u) - map.cdf.begin();
      idx = std::min(idx, map.cdf.size() - 1);
      int px = static_cast<int>(idx % map.width);
      int py = static_cast<int>(idx / map.width);

      TrainRay ray;
      ray.camera = ci;
      ray.px = px;
      ray.py = py;
      ray.ray = generate_ray(cam, px + 0.5, py + 0.5);
      ray.neighbor = generate_ray_unchecked(cam, px + 1.5, py + 0.5);
      for (int c = 0; c < 3; ++c) ray.gt[c] = model_images[ci].at(px, py, c);
      if (ds.depths[ci]) {
        float d = ds.depths[ci]->at(px, py, 0);
        ray.gt_depth = d < 1e29f ? d : -1.0;
      }
      double half_diag = 0.5 * std::sqrt(static_cast<double>(cam.width) * cam.width +
                                         static_cast<double>(cam.height) * cam.height);
      double dx = (px + 0.5) - cam.cx, dy = (py + 0.5) - cam.cy;
      ray.vignette_r = std::sqrt(dx * dx + dy * dy) / half_diag;
      batch.push_back(ray);
    }
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

Image<float> pq_to_srgb_float(const Image<float>& pq) {
  Image<float> out(pq.width, pq.height, pq.channels);
  for (size_t i = 0; i < pq.data.size(); ++i) {
    double linear = pq_decode(clamp(static_cast<double>(pq.data[i]), 0.0, 1.0));
    out.data[i] = static_cast<float>(srgb_oetf(clamp(linear, 0.0, 1.0)));
  }
  return out;
}

}  // namespace

EvalResult evaluate_images(const Image<float>& pred_pq, const Image<float>& gt_pq) {
  EvalResult r;
  r.psnr_pq = psnr(pred_pq, gt_pq);
  r.ssim_pq = ssim(pred_pq, gt_pq);
  Image<float> pred_srgb = pq_to_srgb_float(pred_pq);
  Image<float> gt_srgb = pq_to_srgb_float(gt_pq);
  r.psnr_srgb = psnr(pred_srgb, gt_srgb);
  r.ssim_srgb = ssim(pred_srgb, gt_srgb);
  return r;
}

EvalResult evaluate(const Checkpoint& ck, const SceneDataset& ds) {
  require(ds.held_out >= 0, "evaluate: no held-out camera");
  const CameraModel& cam = ds.manifest.cameras[ds.held_out];
  RenderOptions opts;
  opts.samples_per_ray = ck.samples_per_ray;
  opts.contraction.mode = ck.contraction;
  for (int c = 0; c < 3; ++c) opts.background[c] = ck.background_model[c];
  Image<float> out(cam.width, cam.height, 3);
  render_rows(ck.field, ck.occupancy, cam, opts, 0, cam.height, &out, nullptr, nullptr, nullptr);
  if (ck.config.color_space == ColorSpaceMode::kLinear) {
    // Linear-space model: convert the prediction to PQ for the comparison.
    for (auto& v : out.data)
      v = static_cast<float>(pq_encode(std::max(0.0, static_cast<double>(v))));
  }
  return evaluate_images(out, ds.images_pq[ds.held_out]);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

namespace {

struct AdamState {
  std::vector<float> m, v;
  void init(size_t n) {
    m.assign(n, 0.0f);
    v.assign(n, 0.0f);
  }
};

void adam_update(float* params, const float* grads, AdamState& st, size_t n, double lr,
                 const TrainConfig& cfg, int64_t t) {
  float c1 = static_cast<float>(1.0 / (1.0 - std::pow(cfg.beta1, t)));
  float c2 = static_cast<float>(1.0 / (1.0 - std::pow(cfg.beta2, t)));
  simd::adam_step<float>(n, params, grads, st.m.data(), st.v.data(), static_cast<float>(lr),
                         static_cast<float>(cfg.beta1), static_cast<float>(cfg.beta2),
                         static_cast<float>(cfg.adam_eps), c1, c2);
}

}  // namespace

// ---------------------------------------------------------------------------
// Gradient self-check (miniature double-precision configuration)
// ---------------------------------------------------------------------------

namespace {

struct TinyObjective {
  FieldConfig fc;
  RadianceField<double> field;
  OccupancyGrid grid{8};
  std::vector<TrainRay> rays;
  TrainConfig cfg;
  RenderOptions opts;
  double alpha_v = 0.03;

  explicit TinyObjective(uint64_t seed) : fc(make_config()), field(fc) {
    field.init_random(seed);
    // Give the grid non-trivial content so gradients are not degenerate.
    Rng rng(seed + 1);
    double* g = field.grid().parameters();
    for (size_t i = 0; i < field.grid().parameter_count(); ++i) g[i] = rng.uniform(-0.5, 0.5);

    cfg.lambda_depth = 0.1;
    cfg.lambda_dvar = 0.01;
    cfg.lambda_dist = 0.001;
    cfg.lambda_empty = 0.01;
    cfg.lambda_wd = 1e-6;
    opts.samples_per_ray = 24;
    opts.termination_transmittance = 0;  // keep the objective smooth
    opts.chunk_size = 7;                 // exercise chunk boundaries
    opts.background[0] = 0.2;
    opts.background[1] = 0.25;
    opts.background[2] = 0.3;

    CameraModel cam;
    cam.width = cam.height = 8;
    cam.fx = cam.fy = 6;
    cam.cx = cam.cy = 4;
    cam.t_near = 0.2;
    cam.t_far = 2.5;
    cam.pose.origin = {-1.2, 0.05, 0.1};
    cam.pose.rot = {0, 0, 1, 1, 0, 0, 0, 1, 0};  // looks along +x
    for (int i = 0; i < 4; ++i) {
      TrainRay r;
      double px = 1.5 + 1.7 * i, py = 2.0 + 1.1 * i;
      r.ray = generate_ray(cam, px, py);
      r.neighbor = generate_ray_unchecked(cam, px + 1, py);
      r.gt[0] = 0.3f + 0.1f * i;
      r.gt[1] = 0.5f;
      r.gt[2] = 0.4f - 0.05f * i;
      r.gt_depth = 0.8 + 0.2 * i;
      r.vignette_r = 0.2 + 0.15 * i;
      rays.push_back(r);
    }
  }

  static FieldConfig make_config() {
    FieldConfig fc;
    fc.grid.levels = 4;
    fc.grid.base_resolution = 4;
    fc.grid.per_level_scale = 1.5;
    fc.grid.table_size = 1u << 8;
    return fc;
  }

  std::vector<Vec3> empty_points() const {
    std::vector<Vec3> pts;
    Rng rng(99);
    for (int i = 0; i < 6; ++i)
      pts.push_back({rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)});
    return pts;
  }

  double forward_loss() const {
    double total = 0;
    RayMarchRecord<double> rec;
    double inv_batch = 1.0 / rays.size();
    for (const auto& r : rays) {
      march_ray(field, grid, r.ray, r.neighbor, 0.2, 2.5, opts, false, rec);
      LossTerms lt = ray_loss(rec, r, alpha_v, opts.contraction, cfg, true, inv_batch, nullptr);
      total += lt.total;
    }
    auto pts = empty_points();
    double empty = 0;
    for (const auto& p : pts) empty += field.density_at(p);
    total += cfg.lambda_empty * empty / pts.size();
    total += cfg.lambda_wd *
             simd::scalar::sqnorm<double>(field.grid().parameter_count(), field.grid().parameters());
    return total;
  }

  void backward(FieldGradients<double>& grads, double* d_alpha) {
    grads.zero();
    *d_alpha = 0;
    RayMarchRecord<double> rec;
    RayLossGrad rg;
    std::vector<double> scratch, dcol_scratch;
    double inv_batch = 1.0 / rays.size();
    for (const auto& r : rays) {
      march_ray(field, grid, r.ray, r.neighbor, 0.2, 2.5, opts, true, rec);
      ray_loss(rec, r, alpha_v, opts.contraction, cfg, true, inv_batch, &rg);
      backward_ray(field, rec, rg, opts.background, grads, scratch, dcol_scratch);
      *d_alpha += rg.d_alpha_v;
    }
    auto pts = empty_points();
    FieldChunk<double> chunk;
    chunk.n = static_cast<int>(pts.size());
    chunk.pos = pts;
    chunk.lodw.assign(pts.size() * fc.grid.levels, 1.0f);
    field.forward_chunk(chunk, nullptr, false);
    std::vector<double> dsigma(pts.size(), cfg.lambda_empty / pts.size());
    field.backward_chunk(chunk, dsigma.data(), nullptr, grads, scratch);
    simd::scalar::axpy<double>(grads.grid.size(), 2.0 * cfg.lambda_wd,
                               field.grid().parameters(), grads.grid.data());
  }
};

}  // namespace

double gradient_selfcheck(uint64_t seed) {
  TinyObjective obj(seed);
  FieldGradients<double> grads = obj.field.make_gradients();
  double d_alpha = 0;
  obj.backward(grads, &d_alpha);

  Rng pick(seed + 17);
  const double h = 1e-4;
  double worst = 0;
  auto check = [&](double* param, double analytic) {
    double saved = *param;
    *param = saved + h;
    double up = obj.forward_loss();
    *param = saved - h;
    double down = obj.forward_loss();
    *param = saved;
    double fd = (up - down) / (2 * h);
    double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
    worst = std::max(worst, std::abs(fd - analytic) / denom);
  };

  for (int k = 0; k < 10; ++k) {
    size_t i = pick.next_below(static_cast<uint32_t>(obj.field.grid().parameter_count()));
    check(obj.field.grid().parameters() + i, grads.grid[i]);
  }
  std::vector<double> p(obj.field.density_net().parameter_count());
  for (int k = 0; k < 10; ++k) {
    obj.field.density_net().copy_params(p.data());
    size_t i = pick.next_below(static_cast<uint32_t>(p.size()));
    double saved = p[i];
    p[i] = saved + h;
    obj.field.density_net().set_params(p.data());
    double up = obj.forward_loss();
    p[i] = saved - h;
    obj.field.density_net().set_params(p.data());
    double down = obj.forward_loss();
    p[i] = saved;
    obj.field.density_net().set_params(p.data());
    double fd = (up - down) / (2 * h);
    double denom = std::max({std::abs(fd), std::abs(grads.density[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - grads.density[i]) / denom);
  }
  p.resize(obj.field.color_net().parameter_count());
  for (int k = 0; k < 10; ++k) {
    obj.field.color_net().copy_params(p.data());
    size_t i = pick.next_below(static_cast<uint32_t>(p.size()));
    double saved = p[i];
    p[i] = saved + h;
    obj.field.color_net().set_params(p.data());
    double up = obj.forward_loss();
    p[i] = saved - h;
    obj.field.color_net().set_params(p.data());
    double down = obj.forward_loss();
    p[i] = saved;
    obj.field.color_net().set_params(p.data());
    double fd = (up - down) / (2 * h);
    double denom = std::max({std::abs(fd), std::abs(grads.color[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - grads.color[i]) / denom);
  }
  check(&obj.alpha_v, d_alpha);
  return worst;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

TrainResult train(const SceneDataset& ds, const TrainConfig& cfg) {
  require(!ds.train_cameras.empty(), "train: empty dataset");
  if (cfg.grad_selfcheck) {
    double err = gradient_selfcheck(cfg.seed + 4242);
    require(err < 1e-3, "train: gradient self-check failed, worst rel err " + std::to_string(err));
  }

  const ContractionSpec contraction{ds.manifest.contraction};
  const bool pq_mode = cfg.field.color_space == ColorSpaceMode::kPq;

  // Model-space images and background: PQ-encoded for the PQ head, raw
  // radiance for the linear ablation.
  std::vector<Image<float>> model_images;
  for (size_t i = 0; i < ds.images_pq.size(); ++i) {
    if (pq_mode) {
      model_images.push_back(ds.images_pq[i]);
    } else {
      Image<float> lin(ds.images_pq[i].width, ds.images_pq[i].height, 3);
      for (size_t k = 0; k < lin.data.size(); ++k)
        lin.data[k] = static_cast<float>(pq_decode(ds.images_pq[i].data[k]));
      model_images.push_back(std::move(lin));
    }
  }
  double background[3];
  for (int c = 0; c < 3; ++c)
    background[c] = pq_mode ? pq_encode(ds.manifest.background[c]) : ds.manifest.background[c];

  // Pixel weight maps from PQ luminance (the perceptual proxy for the
  // tonemapped image).
  std::vector<PixelWeightMap> weights(ds.manifest.cameras.size());
  for (int ci : ds.train_cameras) {
    const auto& img = ds.images_pq[ci];
    Image<float> lum(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        lum.at(x, y, 0) = (img.at(x, y, 0) + img.at(x, y, 1) + img.at(x, y, 2)) / 3.0f;
    weights[ci] = cfg.weighted_sampling
                      ? build_pixel_weights(lum, ds.manifest.cameras[ci], cfg.weight_high,
                                            cfg.weight_low)
                      : build_pixel_weights(Image<float>(img.width, img.height, 1),
                                            ds.manifest.cameras[ci]);
  }

  RadianceField<float> field(cfg.field);
  field.init_random(cfg.seed);
  OccupancyGrid occupancy(cfg.occupancy_resolution);
  occupancy.carve_cylinders(ds.manifest.cylinders);

  std::vector<double> alpha_v(ds.manifest.cameras.size(), 0.0);
  for (size_t i = 0; i < alpha_v.size(); ++i) alpha_v[i] = ds.manifest.cameras[i].alpha_v;

  FieldGradients<float> grads = field.make_gradients();
  AdamState adam_grid, adam_density, adam_color;
  adam_grid.init(grads.grid.size());
  adam_density.init(grads.density.size());
  adam_color.init(grads.color.size());
  std::vector<float> alpha_m(alpha_v.size(), 0.0f), alpha_vel(alpha_v.size(), 0.0f);

  std::vector<float> net_params;  // staging for adam updates

  RenderOptions march_opts;
  march_opts.samples_per_ray = cfg.samples_per_ray;
  march_opts.termination_transmittance = cfg.termination_transmittance;
  march_opts.contraction = contraction;
  for (int c = 0; c < 3; ++c) march_opts.background[c] = background[c];

  const int iters = cfg.iterations;
  const int depth_window = static_cast<int>(cfg.depth_window_frac * iters);
  const int prune_start = static_cast<int>(cfg.prune_start_frac * iters);
  const int prune_every = std::max(1, static_cast<int>(cfg.prune_every_frac * iters));
  const int probe_every = std::max(1, static_cast<int>(cfg.probe_every_frac * iters));
  std::vector<int> upsample_iters;
  for (double frac : cfg.upsample_milestones)
    upsample_iters.push_back(static_cast<int>(frac * iters));
  const int lod_anneal_end = static_cast<int>(cfg.lod_anneal_end_frac * iters);
  const int validate_every = cfg.validate_every > 0 ? cfg.validate_every : std::max(1, iters / 10);

  int probe_points = cfg.probe_points_per_axis;

  TrainResult result;
  Rng rng(cfg.seed);
  RayMarchRecord<float> rec;
  RayLossGrad rg;
  std::vector<float> scratch, dcol_scratch;

  std::ofstream csv;
  if (!cfg.metrics_csv.empty()) {
    csv.open(cfg.metrics_csv);
    require(csv.good(), "train: cannot write metrics csv " + cfg.metrics_csv);
    csv << "iteration,loss_total,loss_image,loss_depth,loss_dvar,loss_dist,loss_empty,loss_wd,"
           "psnr_srgb,psnr_pq,ssim_srgb,ssim_pq\n";
  }

  auto make_checkpoint = [&]() {
    Checkpoint ck{cfg.field, RadianceField<float>(cfg.field), OccupancyGrid(1), alpha_v,
                  {background[0], background[1], background[2]},
                  ds.manifest.contraction, cfg.samples_per_ray};
    ck.field = field;
    ck.occupancy = occupancy;
    return ck;
  };

  auto validate = [&](int iter) {
    Checkpoint ck = make_checkpoint();
    EvalResult ev = evaluate(ck, ds);
    result.validations.push_back(ev);
    result.validation_iters.push_back(iter);
    return ev;
  };

  for (int iter = 0; iter < iters; ++iter) {
    if (cfg.lod_anneal) {
      double f = lod_anneal_end > 0 ? std::min(1.0, static_cast<double>(iter) / lod_anneal_end)
                                    : 1.0;
      march_opts.lod_bias = cfg.lod_anneal_start * (1.0 - f);
    }

    auto batch = sample_batch(ds, model_images, weights, cfg, rng);
    const double inv_batch = 1.0 / batch.size();
    const bool depth_active = iter < depth_window;
    const bool history_active = iter >= prune_start;

    grads.zero();
    std::vector<double> alpha_grad(alpha_v.size(), 0.0);
    LossTerms losses;

    for (const auto& ray : batch) {
      const CameraModel& cam = ds.manifest.cameras[ray.camera];
      march_ray(field, occupancy, ray.ray, ray.neighbor, cam.t_near, cam.t_far, march_opts, true,
                rec);
      LossTerms lt = ray_loss(rec, ray, alpha_v[ray.camera], contraction, cfg, depth_active,
                              inv_batch, &rg);
      losses.image += lt.image;
      losses.depth += lt.depth;
      losses.dvar += lt.dvar;
      losses.dist += lt.dist;
      backward_ray(field, rec, rg, march_opts.background, grads, scratch, dcol_scratch);
      alpha_grad[ray.camera] += rg.d_alpha_v;
      if (history_active) {
        int off = 0;
        for (int k = 0; k < rec.chunk_count; ++k) {
          const auto& ck = rec.chunks[k];
          for (int i = 0; i < ck.n; ++i)
            occupancy.record_history(ck.pos[i], rec.sigma[off + i]);
          off += ck.n;
        }
      }
    }

    // Empty-around-camera regularizer: random points in unit balls around
    // training cameras.
    if (cfg.lambda_empty > 0 && cfg.empty_samples > 0) {
      FieldChunk<float> chunk;
      chunk.n = cfg.empty_samples;
      chunk.pos.resize(cfg.empty_samples);
      for (int i = 0; i < cfg.empty_samples; ++i) {
        int ci = ds.train_cameras[rng.next_below(static_cast<uint32_t>(ds.train_cameras.size()))];
        Vec3 center = ds.manifest.cameras[ci].pose.origin;
        Vec3 p;
        do {
          p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        } while (p.dot(p) > 1.0);
        chunk.pos[i] = contract(center + p * cfg.empty_radius, contraction);
      }
      chunk.lodw.assign(static_cast<size_t>(cfg.empty_samples) * cfg.field.grid.levels, 1.0f);
      field.forward_chunk(chunk, nullptr, false);
      double mean_sigma = 0;
      for (int i = 0; i < chunk.n; ++i) mean_sigma += chunk.sigma[i];
      mean_sigma /= chunk.n;
      losses.empty = cfg.lambda_empty * mean_sigma;
      std::vector<float> dsigma(chunk.n, static_cast<float>(cfg.lambda_empty / chunk.n));
      field.backward_chunk(chunk, dsigma.data(), nullptr, grads, scratch);
    }

    if (cfg.lambda_wd > 0) {
      losses.wd = cfg.lambda_wd *
                  simd::sqnorm<float>(field.grid().parameter_count(), field.grid().parameters());
      simd::axpy<float>(grads.grid.size(), static_cast<float>(2.0 * cfg.lambda_wd),
                        field.grid().parameters(), grads.grid.data());
    }

    losses.total = losses.image + losses.depth + losses.dvar + losses.dist + losses.empty +
                   losses.wd;
    require(std::isfinite(losses.total), "train: non-finite loss at iteration " +
                                             std::to_string(iter));
    result.losses.push_back(losses);

    // Optimizer step.
    const int64_t t = iter + 1;
    adam_update(field.grid().parameters(), grads.grid.data(), adam_grid, grads.grid.size(),
                cfg.lr_grid, cfg, t);
    net_params.resize(field.density_net().parameter_count());
    field.density_net().copy_params(net_params.data());
    adam_update(net_params.data(), grads.density.data(), adam_density, net_params.size(),
                cfg.lr_net, cfg, t);
    field.density_net().set_params(net_params.data());
    net_params.resize(field.color_net().parameter_count());
    field.color_net().copy_params(net_params.data());
    adam_update(net_params.data(), grads.color.data(), adam_color, net_params.size(), cfg.lr_net,
                cfg, t);
    field.color_net().set_params(net_params.data());
    {
      float c1 = static_cast<float>(1.0 / (1.0 - std::pow(cfg.beta1, t)));
      float c2 = static_cast<float>(1.0 / (1.0 - std::pow(cfg.beta2, t)));
      for (size_t i = 0; i < alpha_v.size(); ++i) {
        float p = static_cast<float>(alpha_v[i]);
        float g = static_cast<float>(alpha_grad[i]);
        simd::scalar::adam_step<float>(1, &p, &g, &alpha_m[i], &alpha_vel[i],
                                       static_cast<float>(cfg.lr_net),
                                       static_cast<float>(cfg.beta1),
                                       static_cast<float>(cfg.beta2),
                                       static_cast<float>(cfg.adam_eps), c1, c2);
        alpha_v[i] = clamp(static_cast<double>(p), 0.0, 0.99);
      }
    }

    // Pruning schedule.
    const int next = iter + 1;
    if (next >= prune_start) {
      for (int up : upsample_iters)
        if (next == up) {
          occupancy.upsample();
          probe_points = std::max(1, probe_points / 2);
        }
      if ((next - prune_start) % probe_every == 0 || next == prune_start) {
        FieldChunk<float> probe_chunk;
        auto density = [&](const Vec3* pts, int count, float* out) {
          probe_chunk.n = count;
          probe_chunk.pos.assign(pts, pts + count);
          probe_chunk.lodw.assign(static_cast<size_t>(count) * cfg.field.grid.levels, 1.0f);
          field.forward_chunk(probe_chunk, nullptr, false);
          for (int i = 0; i < count; ++i) out[i] = probe_chunk.sigma[i];
        };
        occupancy.probe(density, ds.manifest.cameras, cfg.samples_per_ray, probe_points);
      }
      if ((next - prune_start) % prune_every == 0) {
        float alpha = OccupancyGrid::anneal_threshold(next, prune_start, iters,
                                                      cfg.prune_alpha_max);
        occupancy.prune(alpha);
      }
    }

    bool do_validate = (next % validate_every == 0) || next == iters;
    EvalResult ev;
    if (do_validate) ev = validate(next);
    if (csv.is_open()) {
      csv << next << "," << losses.total << "," << losses.image << "," << losses.depth << ","
          << losses.dvar << "," << losses.dist << "," << losses.empty << "," << losses.wd;
      if (do_validate)
        csv << "," << ev.psnr_srgb << "," << ev.psnr_pq << "," << ev.ssim_srgb << ","
            << ev.ssim_pq;
      else
        csv << ",,,,";
      csv << "\n";
    }
  }

  result.checkpoint = make_checkpoint();
  return result;
}

}  // namespace lumi
