// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Pinhole ray generation with footprint radii, vignetting, cubic L-inf space
// contraction, contracted footprints and exponential sample spacing.

#include <vector>

#include "lumi/common.h"

namespace lumi {

struct CameraModel {
  Pose pose;                 // world <- camera, meters
  double fx = 0, fy = 0;     // focal lengths in pixels
  double cx = 0, cy = 0;     // principal point in pixels
  int width = 0, height = 0;
  double alpha_v = 0;        // vignetting coefficient, learnable, in [0,1)
  double t_near = 0.05, t_far = 10.0;
  int id = -1;
};

struct Ray {
  Vec3 origin;
  Vec3 dir;           // unit length
  double base_radius = 0;  // footprint radius at unit distance, 1/focal
  Vec3 at(double t) const { return origin + dir * t; }
};

enum class ContractionMode { kNone, kLInfCubic };

// Identity on the unit cube; outside, the max-magnitude axis maps to
// sign * (2 - 1/|x_j|) and the others divide by the L-inf norm. Image lies
// in [-2,2]^3 and the map is continuous across the cube boundary.
struct ContractionSpec {
  ContractionMode mode = ContractionMode::kLInfCubic;
};

// px, py are continuous image-plane coordinates (pixel centers live at
// integer + 0.5). Must lie inside [0, width) x [0, height).
Ray generate_ray(const CameraModel& cam, double px, double py);

// Same construction without the bounds check, for adjacent-pixel footprint
// probes that may step one pixel outside the image.
Ray generate_ray_unchecked(const CameraModel& cam, double px, double py);

// (1 - alpha * r) with r the distance from the principal point normalized by
// half the image diagonal, floored at 1e-3.
double vignette_factor(const CameraModel& cam, double px, double py);

Vec3 contract(const Vec3& x, const ContractionSpec& spec);

// Inverse of contract; input must lie in the open domain (-2,2)^3.
Vec3 uncontract(const Vec3& c, const ContractionSpec& spec);

// Half the distance between the two rays' contracted points at distance t.
double contracted_footprint(const Ray& ray, const Ray& neighbor, double t,
                            const ContractionSpec& spec);

// t_i = t_near * (t_far/t_near)^(i/(n-1)), endpoints exact.
std::vector<double> sample_distances(double t_near, double t_far, int n);

}  // namespace lumi
