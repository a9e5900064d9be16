// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic scene presets. Each targets one part of the pipeline: `slab` is
// a single textured wall for fast smoke training, `room` is an enclosed
// 5-box room with an emissive window covering the HDR range, `corridor`
// pushes geometry beyond the unit cube to exercise space contraction.

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lumi/scene.h"

namespace lumi {

namespace {

constexpr double kPi = 3.14159265358979323846;

Pose look_at(const Vec3& eye, const Vec3& forward_in) {
  Vec3 z = forward_in.normalized();
  Vec3 up{0, 0, 1};
  Vec3 x = Vec3{z.y * up.z - z.z * up.y, z.z * up.x - z.x * up.z, z.x * up.y - z.y * up.x};
  require(x.norm() > 1e-9, "look_at: forward parallel to up");
  x = x.normalized();
  Vec3 y{z.y * x.z - z.z * x.y, z.z * x.x - z.x * x.z, z.x * x.y - z.y * x.x};
  Pose p;
  p.rot = {x.x, y.x, z.x, x.y, y.y, z.y, x.z, y.z, z.z};
  p.origin = eye;
  return p;
}

CameraModel make_camera(int id, int size, const Vec3& eye, const Vec3& forward, double t_near,
                        double t_far) {
  CameraModel cam;
  cam.id = id;
  cam.width = cam.height = size;
  cam.fx = cam.fy = 0.6 * size;
  cam.cx = size / 2.0;
  cam.cy = size / 2.0;
  cam.pose = look_at(eye, forward);
  cam.t_near = t_near;
  cam.t_far = t_far;
  return cam;
}

SceneBox plain_box(Vec3 min, Vec3 max, double r, double g, double b) {
  SceneBox box;
  box.min = min;
  box.max = max;
  box.albedo[0] = r;
  box.albedo[1] = g;
  box.albedo[2] = b;
  return box;
}

SceneBox checker_box(Vec3 min, Vec3 max, double size, double r1, double g1, double b1, double r2,
                     double g2, double b2) {
  SceneBox box = plain_box(min, max, r1, g1, b1);
  box.checker_size = size;
  box.albedo2[0] = r2;
  box.albedo2[1] = g2;
  box.albedo2[2] = b2;
  return box;
}

SyntheticSceneSpec slab_spec() {
  SyntheticSceneSpec spec;
  spec.boxes.push_back(
      checker_box({-0.9, 0.4, -0.9}, {0.9, 0.6, 0.9}, 0.3, 0.55, 0.22, 0.18, 0.20, 0.42, 0.55));
  spec.background[0] = 0.05;
  spec.background[1] = 0.06;
  spec.background[2] = 0.08;
  return spec;
}

SyntheticSceneSpec room_spec() {
  SyntheticSceneSpec spec;
  // Interior air spans roughly [-0.9,0.9]^2 x [-0.5,0.95]; everything stays
  // inside the unit cube where the contraction is the identity.
  const double lo = -0.98, hi = 0.98;
  spec.boxes.push_back(checker_box({lo, lo, -0.62}, {hi, hi, -0.5}, 0.24, 0.40, 0.34, 0.26, 0.24,
                                   0.30, 0.36));                                  // floor
  spec.boxes.push_back(plain_box({0.9, lo, -0.5}, {hi, hi, 0.98}, 0.50, 0.44, 0.36));  // +x wall
  spec.boxes.push_back(checker_box({lo, lo, -0.5}, {-0.9, hi, 0.98}, 0.06, 0.52, 0.30, 0.22, 0.20,
                                   0.38, 0.52));  // -x accent wall, fine checker
  spec.boxes.push_back(plain_box({lo, 0.9, -0.5}, {hi, hi, 0.98}, 0.34, 0.46, 0.52));  // +y wall
  spec.boxes.push_back(plain_box({lo, lo, -0.5}, {hi, -0.9, 0.98}, 0.48, 0.48, 0.28)); // -y wall
  SceneBox window = plain_box({0.895, -0.35, 0.1}, {0.9, 0.35, 0.5}, 80.0, 78.0, 72.0);
  window.emissive = true;
  spec.boxes.push_back(window);
  // Open ceiling: rays escaping upward see a bright sky.
  spec.background[0] = 2.0;
  spec.background[1] = 2.2;
  spec.background[2] = 2.6;
  return spec;
}

SyntheticSceneSpec corridor_spec() {
  SyntheticSceneSpec spec;
  const double w = 0.6;  // half-width of the corridor
  spec.boxes.push_back(checker_box({-0.5, -w - 0.1, -w}, {6.0, -w, w}, 0.4, 0.45, 0.30, 0.25,
                                   0.25, 0.40, 0.45));  // left wall
  spec.boxes.push_back(checker_box({-0.5, w, -w}, {6.0, w + 0.1, w}, 0.4, 0.30, 0.45, 0.30, 0.40,
                                   0.28, 0.25));        // right wall
  spec.boxes.push_back(plain_box({-0.5, -w, -w - 0.1}, {6.0, w, -w}, 0.35, 0.33, 0.30));  // floor
  spec.boxes.push_back(plain_box({-0.5, -w, w}, {6.0, w, w + 0.1}, 0.55, 0.55, 0.58));  // ceiling
  spec.boxes.push_back(
      checker_box({6.0, -w, -w}, {6.2, w, w}, 0.2, 0.6, 0.5, 0.2, 0.2, 0.3, 0.6));  // end wall
  spec.background[0] = 0.02;
  spec.background[1] = 0.02;
  spec.background[2] = 0.03;
  return spec;
}

std::vector<CameraModel> preset_cameras(const std::string& preset, int count, int size) {
  std::vector<CameraModel> cams;
  if (preset == "slab") {
    // Line of cameras facing the wall, slight lateral and height spread.
    for (int i = 0; i < count; ++i) {
      double u = count > 1 ? static_cast<double>(i) / (count - 1) : 0.5;
      Vec3 eye{-0.5 + u * 1.0, -0.55, -0.25 + 0.5 * ((i % 3) / 2.0)};
      Vec3 fwd{0.12 * std::sin(u * 5.0), 1.0, 0.05};
      cams.push_back(make_camera(i, size, eye, fwd, 0.2, 3.0));
    }
  } else if (preset == "room") {
    // Ring at two heights looking outward and slightly down.
    int per_ring = (count + 1) / 2;
    for (int i = 0; i < count; ++i) {
      int ring = i < per_ring ? 0 : 1;
      int j = ring == 0 ? i : i - per_ring;
      int n = ring == 0 ? per_ring : count - per_ring;
      double theta = 2.0 * kPi * j / std::max(n, 1) + (ring == 1 ? kPi / n : 0.0);
      double z = ring == 0 ? -0.1 : 0.3;
      Vec3 eye{0.45 * std::cos(theta), 0.45 * std::sin(theta), z};
      Vec3 fwd{std::cos(theta), std::sin(theta), ring == 0 ? -0.15 : 0.05};
      cams.push_back(make_camera(i, size, eye, fwd, 0.15, 2.6));
    }
  } else if (preset == "corridor") {
    for (int i = 0; i < count; ++i) {
      double u = count > 1 ? static_cast<double>(i) / (count - 1) : 0.5;
      Vec3 eye{-0.2 + 0.5 * u, -0.3 + 0.6 * (i % 2), -0.1 + 0.25 * ((i / 2) % 2)};
      Vec3 fwd{1.0, 0.25 * std::sin(u * 6.0), 0.02};
      cams.push_back(make_camera(i, size, eye, fwd, 0.1, 12.0));
    }
  } else {
    fail("unknown preset: " + preset);
  }
  return cams;
}

std::vector<RigCylinder> preset_cylinders(const std::string& preset,
                                          const std::vector<CameraModel>& cams) {
  std::vector<RigCylinder> cyl;
  auto add = [&](double x, double y, double r, double z0, double z1) {
    cyl.push_back({x, y, r, z0, z1});
  };
  if (preset == "room") {
    for (const auto& c : cams) add(c.pose.origin.x, c.pose.origin.y, 0.30, -0.46, 0.62);
    // The rig also visited the interior: a coarse walk grid carves the bulk
    // of the room air so early training skips it.
    for (double x = -0.6; x <= 0.61; x += 0.3)
      for (double y = -0.6; y <= 0.61; y += 0.3) add(x, y, 0.30, -0.46, 0.62);
  } else if (preset == "slab") {
    for (const auto& c : cams) add(c.pose.origin.x, c.pose.origin.y, 0.25, -0.45, 0.45);
  } else if (preset == "corridor") {
    for (const auto& c : cams) add(c.pose.origin.x, c.pose.origin.y, 0.22, -0.4, 0.4);
  }
  return cyl;
}

}  // namespace

SyntheticSceneSpec preset_spec(const std::string& preset) {
  if (preset == "slab") return slab_spec();
  if (preset == "room") return room_spec();
  if (preset == "corridor") return corridor_spec();
  fail("unknown preset: " + preset);
}

std::string synth_scene(const std::string& preset, const std::string& dir,
                        const SynthOptions& opts, SyntheticSceneSpec* spec_out) {
  SyntheticSceneSpec spec = preset_spec(preset);
  if (spec_out) *spec_out = spec;
  std::filesystem::create_directories(dir);
  auto base = std::filesystem::path(dir);

  SceneManifest m;
  m.contraction = ContractionMode::kLInfCubic;
  for (int c = 0; c < 3; ++c) m.background[c] = spec.background[c];
  m.cameras = preset_cameras(preset, opts.cameras, opts.image_size);
  m.held_out_camera = m.cameras.size() >= 2 ? m.cameras[m.cameras.size() / 2].id : -1;
  m.cylinders = preset_cylinders(preset, m.cameras);

  for (const auto& cam : m.cameras) {
    HdrImage img;
    Image<float> depth;
    oracle_render(spec, cam, &img, opts.write_depth ? &depth : nullptr);
    char name[64];
    std::snprintf(name, sizeof(name), "cam_%03d.pfm", cam.id);
    write_pfm((base / name).string(), img.radiance);
    m.image_paths.push_back(name);
    if (opts.write_depth) {
      std::snprintf(name, sizeof(name), "depth_%03d.pfm", cam.id);
      write_pfm((base / name).string(), depth);
      m.depth_paths.push_back(name);
    } else {
      m.depth_paths.push_back("");
    }
  }

  if (opts.write_brackets && !m.cameras.empty()) {
    HdrImage img;
    oracle_render(spec, m.cameras[0], &img, nullptr);
    std::vector<double> times;
    for (int i = -4; i <= 4; ++i) times.push_back(std::ldexp(1.0 / 60.0, i));
    Rng rng(opts.seed);
    ExposureStack stack = simulate_bracket(img, times, 4.0, opts.bracket_photon_scale, rng);
    nlohmann::json bj;
    bj["exposures"] = nlohmann::json::array();
    for (size_t i = 0; i < stack.exposures.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "bracket_%02zu.pfm", i);
      write_pfm((base / name).string(), stack.exposures[i].raw);
      bj["exposures"].push_back({{"file", name},
                                 {"time", stack.exposures[i].time_s},
                                 {"sat_level", stack.exposures[i].sat_level}});
    }
    std::ofstream bf((base / "brackets.json").string());
    bf << bj.dump(2) << "\n";
  }

  auto manifest_path = (base / "scene.json").string();
  save_manifest(m, manifest_path);
  return manifest_path;
}

}  // namespace lumi
