// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Scene manifests, dataset ingestion, the analytic synthetic-scene oracle and
// checkpoint serialization. The oracle carries its own ray/box geometry so
// renders from it stay independent of the learned pipeline.

#include <optional>
#include <string>
#include <vector>

#include "lumi/camera.h"
#include "lumi/color.h"
#include "lumi/field.h"
#include "lumi/image.h"
#include "lumi/occupancy.h"

namespace lumi {

// Axis-aligned box with constant or checkerboard albedo (scene-linear
// radiance leaving the surface). Emissive boxes are bright sources.
struct SceneBox {
  Vec3 min, max;
  double albedo[3] = {0.5, 0.5, 0.5};
  double albedo2[3] = {0.5, 0.5, 0.5};  // checker partner color
  double checker_size = 0;              // 0 = constant color
  bool emissive = false;
};

struct SyntheticSceneSpec {
  std::vector<SceneBox> boxes;
  double background[3] = {0, 0, 0};  // radiance for rays that miss
  double depth_infinity = 1e30;      // depth sentinel for misses
};

// Analytic render: nearest box hit per pixel, exact depth. No shared
// geometry code with the learned renderer.
void oracle_render(const SyntheticSceneSpec& spec, const CameraModel& cam, HdrImage* image,
                   Image<float>* depth);

// Simulated exposure bracket: counts_i = min(Poisson(rad*t*scale)/scale,
// sat_level); photon_scale <= 0 switches to the noiseless limit.
ExposureStack simulate_bracket(const HdrImage& hdr, const std::vector<double>& times,
                               double sat_level, double photon_scale, Rng& rng);

struct SceneManifest {
  int version = 1;
  ContractionMode contraction = ContractionMode::kLInfCubic;
  double background[3] = {0, 0, 0};  // scene-linear
  int held_out_camera = -1;
  std::vector<RigCylinder> cylinders;
  std::vector<CameraModel> cameras;
  std::vector<std::string> image_paths;  // parallel to cameras
  std::vector<std::string> depth_paths;  // empty string when absent
  std::string scale_note = "1 unit = 1 meter";
};

void save_manifest(const SceneManifest& m, const std::string& path);
SceneManifest load_manifest(const std::string& path);

struct SceneDataset {
  SceneManifest manifest;
  std::vector<Image<float>> images_pq;          // per camera, 3 channels
  std::vector<std::optional<Image<float>>> depths;
  std::vector<int> train_cameras;               // indices into manifest.cameras
  int held_out = -1;                            // index into manifest.cameras
};

// Loads images referenced by the manifest, validates shapes, converts
// radiance to PQ, and splits off the held-out camera.
SceneDataset load_scene(const std::string& manifest_path);

// Presets. Each writes PFM images + optional depth + manifest under dir and
// returns the manifest path. `spec_out` exposes the oracle geometry.
struct SynthOptions {
  int image_size = 96;
  int cameras = 24;
  uint64_t seed = 7;
  bool write_depth = true;
  bool write_brackets = false;   // exposure stacks for camera 0
  double bracket_photon_scale = 1e4;
};
std::string synth_scene(const std::string& preset, const std::string& dir,
                        const SynthOptions& opts, SyntheticSceneSpec* spec_out);

// Oracle spec for a manifest produced by synth_scene (used by acceptance
// checks that need geometry, e.g. pruning soundness).
SyntheticSceneSpec preset_spec(const std::string& preset);

// Model checkpoint: versioned little-endian binary with sections for the
// field config, grid tables, network weights, per-camera vignetting and
// the occupancy grid. Round-trips bit-exactly.
struct Checkpoint {
  FieldConfig config;
  RadianceField<float> field{FieldConfig{}};
  OccupancyGrid occupancy{64};
  std::vector<double> camera_alpha_v;
  double background_model[3] = {0, 0, 0};  // model-space (PQ or linear)
  ContractionMode contraction = ContractionMode::kLInfCubic;
  int samples_per_ray = 256;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Occupied voxel centers as ASCII PLY for inspection.
void export_occupancy_ply(const OccupancyGrid& grid, const std::string& path);

}  // namespace lumi
