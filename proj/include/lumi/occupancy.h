// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Binary occupancy over the contracted domain [-2,2]^3 with cylinder
// initialization, training-history and dense-probe density trackers, annealed
// joint pruning and 2x upsampling.

#include <atomic>
#include <cstdint>
#include <functional>
#include <vector>

#include "lumi/camera.h"
#include "lumi/common.h"

namespace lumi {

// Capture-rig stand-in: voxels entirely inside any cylinder are free space.
struct RigCylinder {
  double center_x = 0, center_y = 0;
  double radius = 0;
  double z_min = 0, z_max = 0;

  bool contains(const Vec3& p) const {
    double dx = p.x - center_x, dy = p.y - center_y;
    return dx * dx + dy * dy < radius * radius && p.z > z_min && p.z < z_max;
  }
};

class OccupancyGrid {
 public:
  static constexpr int kMaxResolution = 1024;

  explicit OccupancyGrid(int resolution = 128);
  OccupancyGrid(const OccupancyGrid& o) { *this = o; }
  OccupancyGrid& operator=(const OccupancyGrid& o);
  OccupancyGrid(OccupancyGrid&&) = default;
  OccupancyGrid& operator=(OccupancyGrid&&) = default;

  int resolution() const { return res_; }
  size_t voxel_count() const { return static_cast<size_t>(res_) * res_ * res_; }

  // Voxel index for a contracted point; -1 outside the domain.
  int64_t voxel_index(const Vec3& contracted) const;
  Vec3 voxel_center(int64_t index) const;
  double voxel_extent() const { return 4.0 / res_; }

  bool is_occupied(const Vec3& contracted) const {
    int64_t i = voxel_index(contracted);
    return i >= 0 && occupied_[static_cast<size_t>(i)];
  }
  bool occupied_bit(size_t index) const { return occupied_[index] != 0; }

  // Cylinders are given in world coordinates; each voxel's 8 corners and
  // center are mapped back from the contracted domain before the test. A
  // voxel becomes permanently free only when all 9 points lie strictly
  // inside some single cylinder; partially covered voxels are untouched.
  void carve_cylinders(const std::vector<RigCylinder>& cylinders);

  // Training-history tracker: atomic max of observed density per voxel.
  void record_history(const Vec3& contracted, float sigma);
  float history_density(size_t index) const;

  // Dense probe: evaluate density at points_per_axis^3 interior lattice
  // points per voxel and store the maximum opacity-contribution density
  // (1 - exp(-sigma * dt)) / dt with dt the minimum step size implied by the
  // nearest camera's exponential sampling at the voxel's distance. The
  // functor fills out[i] with the density at pts[i] (batched per voxel).
  using DensityBatchFn = std::function<void(const Vec3* pts, int n, float* out)>;
  void probe(const DensityBatchFn& density, const std::vector<CameraModel>& cameras,
             int samples_per_ray, int points_per_axis);
  float probe_density(size_t index) const { return probe_max_[index]; }

  // Threshold both trackers at alpha; a voxel is free iff both fall below
  // and it was not cylinder-carved into permanent free space. Pruning is
  // re-evaluated (not sticky), so voxels whose densities re-exceed the
  // threshold become occupied again.
  void prune(float alpha);

  // Linear anneal from 0 to alpha_max across [start, end] (iterations).
  static float anneal_threshold(int64_t iteration, int64_t start, int64_t end, float alpha_max);

  // Double the resolution; children inherit the parent's bit and trackers.
  void upsample();

  size_t occupied_count() const;

  // Serialization as run-length-encoded bitmap plus raw trackers.
  void save(std::ostream& os) const;
  static OccupancyGrid load(std::istream& is);

 private:
  int res_;
  std::vector<uint8_t> occupied_;
  std::vector<uint8_t> carved_free_;  // permanently free via cylinders
  std::vector<std::atomic<uint32_t>> history_bits_;  // float bits, atomic max
  std::vector<float> probe_max_;
};

}  // namespace lumi
