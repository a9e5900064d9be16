// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#include "lumi/scene.h"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace lumi {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Analytic oracle
// ---------------------------------------------------------------------------

namespace {

struct OracleHit {
  double t = -1;
  const SceneBox* box = nullptr;
  int axis = 0;   // face normal axis
  Vec3 point;
};

// Slab-method ray/box intersection, independent of the renderer's marching.
bool intersect_box(const Vec3& o, const Vec3& d, const SceneBox& b, double* t_hit, int* axis) {
  double t0 = 1e-9, t1 = 1e30;
  int enter_axis = 0;
  for (int a = 0; a < 3; ++a) {
    double dir = a == 0 ? d.x : (a == 1 ? d.y : d.z);
    double org = a == 0 ? o.x : (a == 1 ? o.y : o.z);
    double lo = a == 0 ? b.min.x : (a == 1 ? b.min.y : b.min.z);
    double hi = a == 0 ? b.max.x : (a == 1 ? b.max.y : b.max.z);
    if (std::abs(dir) < 1e-12) {
      if (org < lo || org > hi) return false;
      continue;
    }
    double ta = (lo - org) / dir, tb = (hi - org) / dir;
    if (ta > tb) std::swap(ta, tb);
    if (ta > t0) {
      t0 = ta;
      enter_axis = a;
    }
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  *t_hit = t0;
  *axis = enter_axis;
  return true;
}

void box_color(const SceneBox& b, const Vec3& p, int axis, double out[3]) {
  const double* a = b.albedo;
  if (b.checker_size > 0) {
    // Checker over the two in-plane coordinates of the hit face.
    double u, v;
    if (axis == 0) {
      u = p.y;
      v = p.z;
    } else if (axis == 1) {
      u = p.x;
      v = p.z;
    } else {
      u = p.x;
      v = p.y;
    }
    long long iu = static_cast<long long>(std::floor(u / b.checker_size));
    long long iv = static_cast<long long>(std::floor(v / b.checker_size));
    if (((iu + iv) & 1) != 0) a = b.albedo2;
  }
  out[0] = a[0];
  out[1] = a[1];
  out[2] = a[2];
}

}  // namespace

void oracle_render(const SyntheticSceneSpec& spec, const CameraModel& cam, HdrImage* image,
                   Image<float>* depth) {
  require(cam.width > 0 && cam.height > 0 && cam.fx > 0 && cam.fy > 0,
          "oracle_render: degenerate camera");
  *image = HdrImage(cam.width, cam.height, 3);
  if (depth) *depth = Image<float>(cam.width, cam.height, 1);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      // Pinhole projection written out locally; the oracle shares no
      // geometry code with the learned pipeline.
      double px = x + 0.5, py = y + 0.5;
      Vec3 dir_cam{(px - cam.cx) / cam.fx, (py - cam.cy) / cam.fy, 1.0};
      Vec3 d = cam.pose.rotate(dir_cam).normalized();
      Vec3 o = cam.pose.origin;

      OracleHit best;
      for (const auto& b : spec.boxes) {
        double t;
        int axis;
        if (intersect_box(o, d, b, &t, &axis) && (best.t < 0 || t < best.t)) {
          best.t = t;
          best.box = &b;
          best.axis = axis;
          best.point = o + d * t;
        }
      }
      double rgb[3];
      double dist;
      if (best.box) {
        box_color(*best.box, best.point, best.axis, rgb);
        dist = best.t;
      } else {
        rgb[0] = spec.background[0];
        rgb[1] = spec.background[1];
        rgb[2] = spec.background[2];
        dist = spec.depth_infinity;
      }
      for (int c = 0; c < 3; ++c) image->radiance.at(x, y, c) = static_cast<float>(rgb[c]);
      if (depth) depth->at(x, y, 0) = static_cast<float>(dist);
    }
  }
}

ExposureStack simulate_bracket(const HdrImage& hdr, const std::vector<double>& times,
                               double sat_level, double photon_scale, Rng& rng) {
  for (size_t i = 1; i < times.size(); ++i)
    require(times[i] > times[i - 1], "simulate_bracket: times must be increasing");
  ExposureStack stack;
  for (double t : times) {
    Exposure e;
    e.time_s = t;
    e.sat_level = sat_level;
    e.raw = Image<float>(hdr.width(), hdr.height(), hdr.radiance.channels);
    for (size_t i = 0; i < e.raw.data.size(); ++i) {
      double expected = static_cast<double>(hdr.radiance.data[i]) * t;
      double counts;
      if (photon_scale > 0)
        counts = static_cast<double>(rng.poisson(expected * photon_scale)) / photon_scale;
      else
        counts = expected;
      e.raw.data[i] = static_cast<float>(std::min(counts, sat_level));
    }
    stack.exposures.push_back(std::move(e));
  }
  return stack;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

namespace {

json pose_to_json(const Pose& p) {
  json m = json::array();
  const double* r = p.rot.data();
  double rows[16] = {r[0], r[1], r[2], p.origin.x, r[3], r[4], r[5], p.origin.y,
                     r[6], r[7], r[8], p.origin.z, 0,    0,    0,    1};
  for (double v : rows) m.push_back(v);
  return m;
}

Pose pose_from_json(const json& m) {
  require(m.is_array() && m.size() == 16, "manifest: pose must be a 16-entry row-major matrix");
  Pose p;
  p.rot = {m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]};
  p.origin = {m[3], m[7], m[11]};
  return p;
}

}  // namespace

void save_manifest(const SceneManifest& m, const std::string& path) {
  json j;
  j["version"] = m.version;
  j["contraction"] = m.contraction == ContractionMode::kLInfCubic ? "l_inf_cubic" : "none";
  j["background"] = {m.background[0], m.background[1], m.background[2]};
  j["held_out_camera"] = m.held_out_camera;
  j["scale_note"] = m.scale_note;
  j["cylinders"] = json::array();
  for (const auto& c : m.cylinders)
    j["cylinders"].push_back({{"x", c.center_x},
                              {"y", c.center_y},
                              {"radius", c.radius},
                              {"z_min", c.z_min},
                              {"z_max", c.z_max}});
  j["cameras"] = json::array();
  for (size_t i = 0; i < m.cameras.size(); ++i) {
    const auto& c = m.cameras[i];
    json jc = {{"id", c.id},           {"pose", pose_to_json(c.pose)},
               {"fx", c.fx},           {"fy", c.fy},
               {"cx", c.cx},           {"cy", c.cy},
               {"width", c.width},     {"height", c.height},
               {"alpha_v", c.alpha_v}, {"t_near", c.t_near},
               {"t_far", c.t_far},     {"image", m.image_paths[i]}};
    if (!m.depth_paths.empty() && !m.depth_paths[i].empty()) jc["depth"] = m.depth_paths[i];
    j["cameras"].push_back(jc);
  }
  std::ofstream f(path);
  require(f.good(), "manifest: cannot write " + path);
  f << j.dump(2) << "\n";
}

SceneManifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "manifest: cannot open " + path);
  json j;
  f >> j;
  SceneManifest m;
  m.version = j.at("version");
  std::string mode = j.at("contraction");
  require(mode == "l_inf_cubic" || mode == "none", "manifest: unknown contraction mode " + mode);
  m.contraction = mode == "l_inf_cubic" ? ContractionMode::kLInfCubic : ContractionMode::kNone;
  for (int c = 0; c < 3; ++c) m.background[c] = j.at("background")[c];
  m.held_out_camera = j.at("held_out_camera");
  m.scale_note = j.value("scale_note", "");
  for (const auto& jc : j.value("cylinders", json::array())) {
    RigCylinder c;
    c.center_x = jc.at("x");
    c.center_y = jc.at("y");
    c.radius = jc.at("radius");
    c.z_min = jc.at("z_min");
    c.z_max = jc.at("z_max");
    m.cylinders.push_back(c);
  }
  for (const auto& jc : j.at("cameras")) {
    CameraModel c;
    c.id = jc.at("id");
    c.pose = pose_from_json(jc.at("pose"));
    c.fx = jc.at("fx");
    c.fy = jc.at("fy");
    c.cx = jc.at("cx");
    c.cy = jc.at("cy");
    c.width = jc.at("width");
    c.height = jc.at("height");
    c.alpha_v = jc.at("alpha_v");
    c.t_near = jc.at("t_near");
    c.t_far = jc.at("t_far");
    m.cameras.push_back(c);
    m.image_paths.push_back(jc.at("image"));
    m.depth_paths.push_back(jc.value("depth", ""));
  }
  return m;
}

SceneDataset load_scene(const std::string& manifest_path) {
  SceneDataset ds;
  ds.manifest = load_manifest(manifest_path);
  auto dir = std::filesystem::path(manifest_path).parent_path();
  const auto& m = ds.manifest;
  int held_count = 0;
  for (size_t i = 0; i < m.cameras.size(); ++i) {
    const auto& cam = m.cameras[i];
    auto img_path = (dir / m.image_paths[i]).string();
    require(std::filesystem::exists(img_path), "load_scene: missing image " + img_path);
    Image<float> linear = read_pfm(img_path);
    require(linear.width == cam.width && linear.height == cam.height && linear.channels == 3,
            "load_scene: image dimensions do not match camera " + std::to_string(cam.id));
    Image<float> pq(linear.width, linear.height, 3);
    for (size_t k = 0; k < linear.data.size(); ++k)
      pq.data[k] = static_cast<float>(pq_encode(std::max(0.0f, linear.data[k])));
    ds.images_pq.push_back(std::move(pq));
    if (!m.depth_paths[i].empty()) {
      auto dpath = (dir / m.depth_paths[i]).string();
      require(std::filesystem::exists(dpath), "load_scene: missing depth " + dpath);
      Image<float> d = read_pfm(dpath);
      require(d.width == cam.width && d.height == cam.height && d.channels == 1,
              "load_scene: depth dimensions mismatch for camera " + std::to_string(cam.id));
      ds.depths.emplace_back(std::move(d));
    } else {
      ds.depths.emplace_back(std::nullopt);
    }
    if (cam.id == m.held_out_camera) {
      ds.held_out = static_cast<int>(i);
      ++held_count;
    } else {
      ds.train_cameras.push_back(static_cast<int>(i));
    }
  }
  require(held_count == 1, "load_scene: exactly one held-out camera required");
  return ds;
}

// ---------------------------------------------------------------------------
// Checkpoint
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'L', 'U', 'M', 'I', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

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

void put_floats(std::ostream& os, const float* data, size_t n) {
  put<uint64_t>(os, n);
  os.write(reinterpret_cast<const char*>(data), n * sizeof(float));
}

std::vector<float> get_floats(std::istream& is) {
  uint64_t n = get<uint64_t>(is);
  std::vector<float> v(n);
  is.read(reinterpret_cast<char*>(v.data()), n * sizeof(float));
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "checkpoint: cannot write " + path);
  os.write(kMagic, sizeof(kMagic));
  put<uint32_t>(os, kVersion);
  const auto& fc = ck.config;
  put<int32_t>(os, fc.grid.levels);
  put<int32_t>(os, fc.grid.features_per_level);
  put<int32_t>(os, fc.grid.base_resolution);
  put<double>(os, fc.grid.per_level_scale);
  put<uint32_t>(os, fc.grid.table_size);
  put<int32_t>(os, fc.hidden_width);
  put<int32_t>(os, fc.bottleneck);
  put<uint8_t>(os, fc.color_space == ColorSpaceMode::kPq ? 0 : 1);
  put<uint8_t>(os, ck.contraction == ContractionMode::kLInfCubic ? 0 : 1);
  put<int32_t>(os, ck.samples_per_ray);
  for (double b : ck.background_model) put<double>(os, b);

  put_floats(os, ck.field.grid().parameters(), ck.field.grid().parameter_count());
  std::vector<float> p(ck.field.density_net().parameter_count());
  ck.field.density_net().copy_params(p.data());
  put_floats(os, p.data(), p.size());
  p.resize(ck.field.color_net().parameter_count());
  ck.field.color_net().copy_params(p.data());
  put_floats(os, p.data(), p.size());

  put<uint64_t>(os, ck.camera_alpha_v.size());
  for (double a : ck.camera_alpha_v) put<double>(os, a);

  ck.occupancy.save(os);
  require(os.good(), "checkpoint: write failed " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  require(std::memcmp(magic, kMagic, sizeof(kMagic)) == 0, "checkpoint: bad magic in " + path);
  require(get<uint32_t>(is) == kVersion, "checkpoint: unsupported version in " + path);
  FieldConfig fc;
  fc.grid.levels = get<int32_t>(is);
  fc.grid.features_per_level = get<int32_t>(is);
  fc.grid.base_resolution = get<int32_t>(is);
  fc.grid.per_level_scale = get<double>(is);
  fc.grid.table_size = get<uint32_t>(is);
  fc.hidden_width = get<int32_t>(is);
  fc.bottleneck = get<int32_t>(is);
  fc.color_space = get<uint8_t>(is) == 0 ? ColorSpaceMode::kPq : ColorSpaceMode::kLinear;
  Checkpoint ck{fc, RadianceField<float>(fc), OccupancyGrid(1), {}, {0, 0, 0},
                ContractionMode::kLInfCubic, 256};
  ck.contraction = get<uint8_t>(is) == 0 ? ContractionMode::kLInfCubic : ContractionMode::kNone;
  ck.samples_per_ray = get<int32_t>(is);
  for (double& b : ck.background_model) b = get<double>(is);

  auto grid_params = get_floats(is);
  require(grid_params.size() == ck.field.grid().parameter_count(),
          "checkpoint: grid size mismatch");
  std::copy(grid_params.begin(), grid_params.end(), ck.field.grid().parameters());
  auto dens = get_floats(is);
  require(dens.size() == ck.field.density_net().parameter_count(),
          "checkpoint: density net size mismatch");
  ck.field.density_net().set_params(dens.data());
  auto col = get_floats(is);
  require(col.size() == ck.field.color_net().parameter_count(),
          "checkpoint: color net size mismatch");
  ck.field.color_net().set_params(col.data());

  uint64_t ncam = get<uint64_t>(is);
  ck.camera_alpha_v.resize(ncam);
  for (auto& a : ck.camera_alpha_v) a = get<double>(is);

  ck.occupancy = OccupancyGrid::load(is);
  return ck;
}

void export_occupancy_ply(const OccupancyGrid& grid, const std::string& path) {
  std::ofstream f(path);
  require(f.good(), "ply: cannot write " + path);
  size_t n = grid.occupied_count();
  f << "ply\nformat ascii 1.0\nelement vertex " << n
    << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  for (size_t i = 0; i < grid.voxel_count(); ++i) {
    if (!grid.occupied_bit(i)) continue;
    Vec3 c = grid.voxel_center(static_cast<int64_t>(i));
    f << static_cast<float>(c.x) << " " << static_cast<float>(c.y) << " "
      << static_cast<float>(c.z) << "\n";
  }
}

}  // namespace lumi
