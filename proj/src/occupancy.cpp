// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#include "lumi/occupancy.h"

#include <bit>
#include <cmath>
#include <istream>
#include <ostream>

namespace lumi {

OccupancyGrid::OccupancyGrid(int resolution) : res_(resolution) {
  require(resolution > 0 && resolution <= kMaxResolution, "occupancy: bad resolution");
  occupied_.assign(voxel_count(), 1);
  carved_free_.assign(voxel_count(), 0);
  history_bits_ = std::vector<std::atomic<uint32_t>>(voxel_count());
  for (auto& h : history_bits_) h.store(0, std::memory_order_relaxed);
  probe_max_.assign(voxel_count(), 0.0f);
}

int64_t OccupancyGrid::voxel_index(const Vec3& c) const {
  double u = (c.x + 2.0) * 0.25, v = (c.y + 2.0) * 0.25, w = (c.z + 2.0) * 0.25;
  if (u < 0 || u > 1 || v < 0 || v > 1 || w < 0 || w > 1) return -1;
  int ix = std::min(static_cast<int>(u * res_), res_ - 1);
  int iy = std::min(static_cast<int>(v * res_), res_ - 1);
  int iz = std::min(static_cast<int>(w * res_), res_ - 1);
  return (static_cast<int64_t>(iz) * res_ + iy) * res_ + ix;
}

Vec3 OccupancyGrid::voxel_center(int64_t index) const {
  int ix = static_cast<int>(index % res_);
  int iy = static_cast<int>((index / res_) % res_);
  int iz = static_cast<int>(index / (static_cast<int64_t>(res_) * res_));
  double e = voxel_extent();
  return {-2.0 + (ix + 0.5) * e, -2.0 + (iy + 0.5) * e, -2.0 + (iz + 0.5) * e};
}

void OccupancyGrid::carve_cylinders(const std::vector<RigCylinder>& cylinders) {
  const ContractionSpec spec;
  const double e = voxel_extent();
  for (size_t i = 0; i < voxel_count(); ++i) {
    Vec3 c = voxel_center(i);
    bool inside = false;
    for (const auto& cyl : cylinders) {
      bool all = true;
      for (int k = 0; k < 9 && all; ++k) {
        Vec3 p = c;
        if (k < 8) {
          p.x += (k & 1 ? 0.5 : -0.5) * e;
          p.y += ((k >> 1) & 1 ? 0.5 : -0.5) * e;
          p.z += ((k >> 2) & 1 ? 0.5 : -0.5) * e;
        }
        if (p.linf() >= 2.0 || !cyl.contains(uncontract(p, spec))) all = false;
      }
      if (all) {
        inside = true;
        break;
      }
    }
    if (inside) {
      carved_free_[i] = 1;
      occupied_[i] = 0;
    }
  }
}

void OccupancyGrid::record_history(const Vec3& contracted, float sigma) {
  int64_t i = voxel_index(contracted);
  if (i < 0) return;
  // sigma >= 0, so IEEE bit patterns order like the floats and an integer
  // CAS loop implements a lock-free float max.
  uint32_t bits = std::bit_cast<uint32_t>(std::max(sigma, 0.0f));
  auto& slot = history_bits_[static_cast<size_t>(i)];
  uint32_t cur = slot.load(std::memory_order_relaxed);
  while (bits > cur && !slot.compare_exchange_weak(cur, bits, std::memory_order_relaxed)) {
  }
}

float OccupancyGrid::history_density(size_t index) const {
  return std::bit_cast<float>(history_bits_[index].load(std::memory_order_relaxed));
}

OccupancyGrid& OccupancyGrid::operator=(const OccupancyGrid& o) {
  if (this == &o) return *this;
  res_ = o.res_;
  occupied_ = o.occupied_;
  carved_free_ = o.carved_free_;
  probe_max_ = o.probe_max_;
  history_bits_ = std::vector<std::atomic<uint32_t>>(o.history_bits_.size());
  for (size_t i = 0; i < history_bits_.size(); ++i)
    history_bits_[i].store(o.history_bits_[i].load(std::memory_order_relaxed),
                           std::memory_order_relaxed);
  return *this;
}

void OccupancyGrid::probe(const DensityBatchFn& density, const std::vector<CameraModel>& cameras,
                          int samples_per_ray, int points_per_axis) {
  require(points_per_axis >= 1, "probe: need at least one point per axis");
  const ContractionSpec spec;
  const double e = voxel_extent();
  const int k = points_per_axis;
  const int pts_per_voxel = k * k * k;
  std::vector<Vec3> pts(pts_per_voxel);
  std::vector<float> sigmas(pts_per_voxel);
  // Precompute per-camera step ratios once.
  std::vector<double> ratios(cameras.size());
  for (size_t ci = 0; ci < cameras.size(); ++ci)
    ratios[ci] = std::pow(cameras[ci].t_far / cameras[ci].t_near, 1.0 / (samples_per_ray - 1));

  for (size_t i = 0; i < voxel_count(); ++i) {
    Vec3 c = voxel_center(i);
    // Worst-case (smallest) step size: the first interval of the nearest
    // camera's exponential sampling at this voxel's distance.
    Vec3 world = c.linf() < 2.0 ? uncontract(c, spec) : c;
    double dt = 1e30;
    for (size_t ci = 0; ci < cameras.size(); ++ci) {
      double dist = std::max((world - cameras[ci].pose.origin).norm(), cameras[ci].t_near);
      dt = std::min(dt, dist * (ratios[ci] - 1.0));
    }
    if (!(dt < 1e29)) dt = e;

    // Lattice at (i+1)/(k+1): interior points, and the k=2 lattice is a
    // subset of the k=8 one, so finer probes can only find larger maxima.
    int m = 0;
    for (int pz = 0; pz < k; ++pz)
      for (int py = 0; py < k; ++py)
        for (int px = 0; px < k; ++px)
          pts[m++] = {c.x + e * ((px + 1.0) / (k + 1) - 0.5),
                      c.y + e * ((py + 1.0) / (k + 1) - 0.5),
                      c.z + e * ((pz + 1.0) / (k + 1) - 0.5)};
    density(pts.data(), pts_per_voxel, sigmas.data());
    float best = 0.0f;
    for (int p = 0; p < pts_per_voxel; ++p) {
      // Opacity contribution over the worst-case step, expressed back in
      // density units so it compares against the history tracker.
      float converted = static_cast<float>((1.0 - std::exp(-sigmas[p] * dt)) / dt);
      best = std::max(best, converted);
    }
    probe_max_[i] = best;
  }
}

void OccupancyGrid::prune(float alpha) {
  for (size_t i = 0; i < voxel_count(); ++i) {
    if (carved_free_[i]) {
      occupied_[i] = 0;
      continue;
    }
    float h = history_density(i);
    float p = probe_max_[i];
    occupied_[i] = (h < alpha && p < alpha) ? 0 : 1;
  }
}

float OccupancyGrid::anneal_threshold(int64_t iteration, int64_t start, int64_t end,
                                      float alpha_max) {
  if (iteration <= start) return 0.0f;
  if (iteration >= end) return alpha_max;
  return alpha_max * static_cast<float>(iteration - start) / static_cast<float>(end - start);
}

void OccupancyGrid::upsample() {
  int new_res = res_ * 2;
  require(new_res <= kMaxResolution, "occupancy: resolution cap exceeded");
  OccupancyGrid out(new_res);
  for (size_t i = 0; i < out.voxel_count(); ++i) {
    int ix = static_cast<int>(i % new_res) / 2;
    int iy = static_cast<int>((i / new_res) % new_res) / 2;
    int iz = static_cast<int>(i / (static_cast<size_t>(new_res) * new_res)) / 2;
    size_t parent = (static_cast<size_t>(iz) * res_ + iy) * res_ + ix;
    out.occupied_[i] = occupied_[parent];
    out.carved_free_[i] = carved_free_[parent];
    out.history_bits_[i].store(history_bits_[parent].load(std::memory_order_relaxed),
                               std::memory_order_relaxed);
    out.probe_max_[i] = probe_max_[parent];
  }
  *this = std::move(out);
}

size_t OccupancyGrid::occupied_count() const {
  size_t n = 0;
  for (auto b : occupied_) n += b;
  return n;
}

namespace {
template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
template <typename T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
}  // namespace

void OccupancyGrid::save(std::ostream& os) const {
  put<int32_t>(os, res_);
  // Run-length encoding of the occupancy bits: (value, count) pairs.
  size_t i = 0;
  uint64_t runs = 0;
  std::vector<std::pair<uint8_t, uint64_t>> rle;
  while (i < occupied_.size()) {
    uint8_t v = occupied_[i];
    uint64_t len = 1;
    while (i + len < occupied_.size() && occupied_[i + len] == v) ++len;
    rle.emplace_back(v, len);
    i += len;
    ++runs;
  }
  put<uint64_t>(os, runs);
  for (auto& [v, len] : rle) {
    put<uint8_t>(os, v);
    put<uint64_t>(os, len);
  }
  os.write(reinterpret_cast<const char*>(carved_free_.data()), carved_free_.size());
  for (size_t j = 0; j < voxel_count(); ++j) put<float>(os, history_density(j));
  os.write(reinterpret_cast<const char*>(probe_max_.data()), probe_max_.size() * sizeof(float));
}

OccupancyGrid OccupancyGrid::load(std::istream& is) {
  int32_t res = get<int32_t>(is);
  OccupancyGrid g(res);
  uint64_t runs = get<uint64_t>(is);
  size_t i = 0;
  for (uint64_t r = 0; r < runs; ++r) {
    uint8_t v = get<uint8_t>(is);
    uint64_t len = get<uint64_t>(is);
    require(i + len <= g.occupied_.size(), "occupancy: corrupt RLE stream");
    std::fill(g.occupied_.begin() + i, g.occupied_.begin() + i + len, v);
    i += len;
  }
  require(i == g.occupied_.size(), "occupancy: truncated RLE stream");
  is.read(reinterpret_cast<char*>(g.carved_free_.data()), g.carved_free_.size());
  for (size_t j = 0; j < g.voxel_count(); ++j)
    g.history_bits_[j].store(std::bit_cast<uint32_t>(get<float>(is)), std::memory_order_relaxed);
  is.read(reinterpret_cast<char*>(g.probe_max_.data()), g.probe_max_.size() * sizeof(float));
  require(is.good(), "occupancy: truncated stream");
  return g;
}

}  // namespace lumi
