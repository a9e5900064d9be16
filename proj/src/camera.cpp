// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#include "lumi/camera.h"

#include <cmath>

namespace lumi {

Ray generate_ray_unchecked(const CameraModel& cam, double px, double py) {
  Vec3 dir_cam{(px - cam.cx) / cam.fx, (py - cam.cy) / cam.fy, 1.0};
  Ray ray;
  ray.origin = cam.pose.origin;
  ray.dir = cam.pose.rotate(dir_cam).normalized();
  ray.base_radius = 1.0 / std::min(cam.fx, cam.fy);
  return ray;
}

Ray generate_ray(const CameraModel& cam, double px, double py) {
  require(cam.fx > 0 && cam.fy > 0, "generate_ray: focal lengths must be positive");
  require(px >= 0 && px < cam.width && py >= 0 && py < cam.height,
          "generate_ray: pixel outside image bounds");
  return generate_ray_unchecked(cam, px, py);
}

double vignette_factor(const CameraModel& cam, double px, double py) {
  double half_diag = 0.5 * std::sqrt(static_cast<double>(cam.width) * cam.width +
                                     static_cast<double>(cam.height) * cam.height);
  double dx = px - cam.cx, dy = py - cam.cy;
  double r = std::sqrt(dx * dx + dy * dy) / half_diag;
  return std::max(1.0 - cam.alpha_v * r, 1e-3);
}

Vec3 contract(const Vec3& x, const ContractionSpec& spec) {
  require(x.finite(), "contract: non-finite input");
  if (spec.mode == ContractionMode::kNone) return x;
  double m = x.linf();
  if (m <= 1.0) return x;
  Vec3 out = x / m;
  // The coordinate of maximal magnitude maps to sign*(2 - 1/|x_j|).
  double mapped = 2.0 - 1.0 / m;
  if (std::abs(x.x) == m)
    out.x = std::copysign(mapped, x.x);
  else if (std::abs(x.y) == m)
    out.y = std::copysign(mapped, x.y);
  else
    out.z = std::copysign(mapped, x.z);
  return out;
}

Vec3 uncontract(const Vec3& c, const ContractionSpec& spec) {
  require(c.finite(), "uncontract: non-finite input");
  if (spec.mode == ContractionMode::kNone) return c;
  double m = c.linf();
  if (m <= 1.0) return c;
  require(m < 2.0, "uncontract: point outside the contracted domain");
  double mag = 1.0 / (2.0 - m);  // |x_j| for the max axis
  Vec3 out = c * mag;
  if (std::abs(c.x) == m)
    out.x = std::copysign(mag, c.x);
  else if (std::abs(c.y) == m)
    out.y = std::copysign(mag, c.y);
  else
    out.z = std::copysign(mag, c.z);
  return out;
}

double contracted_footprint(const Ray& ray, const Ray& neighbor, double t,
                            const ContractionSpec& spec) {
  Vec3 a = contract(ray.at(t), spec);
  Vec3 b = contract(neighbor.at(t), spec);
  return 0.5 * (a - b).norm();
}

std::vector<double> sample_distances(double t_near, double t_far, int n) {
  require(t_near > 0, "sample_distances: t_near must be positive");
  require(t_far > t_near, "sample_distances: t_far must exceed t_near");
  require(n >= 2, "sample_distances: need at least 2 samples");
  std::vector<double> t(n);
  double log_ratio = std::log(t_far / t_near);
  for (int i = 0; i < n; ++i)
    t[i] = t_near * std::exp(log_ratio * (static_cast<double>(i) / (n - 1)));
  t.front() = t_near;
  t.back() = t_far;
  return t;
}

}  // namespace lumi
