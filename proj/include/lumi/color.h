// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Transfer functions between scene-linear radiance, PQ space and display
// sRGB, plus robust merging of exposure brackets into HDR radiance.
//
// Scene-linear 1.0 corresponds to 100 cd/m^2; the PQ ceiling of
// 10,000 cd/m^2 is therefore scene-linear 100.

#include <cstdint>
#include <vector>

#include "lumi/image.h"

namespace lumi {

// SMPTE 2084 constants as exact rationals. c1 + c2 == 1 + c3, which pins
// pq_encode at the ceiling to exactly 1.
struct PqConstants {
  static constexpr double m1 = 1305.0 / 8192.0;
  static constexpr double m2 = 2523.0 / 32.0;
  static constexpr double c1 = 107.0 / 128.0;
  static constexpr double c2 = 2413.0 / 128.0;
  static constexpr double c3 = 2392.0 / 128.0;
};

// Scene-linear radiance (>= 0, finite) to PQ in [0,1]. Values above the
// ceiling clamp to 1.
double pq_encode(double scene_linear);

// Inverse; input must be in [0,1].
double pq_decode(double pq_value);

// sRGB opto-electronic transfer on [0,1].
double srgb_oetf(double linear);
double srgb_eotf(double encoded);

// One exposure of a bracket: raw linear image plus its capture parameters.
struct Exposure {
  Image<float> raw;        // linear raw values, same units as sat_level
  double time_s = 0;       // exposure time in seconds
  double sat_level = 0;    // raw value at which the sensor saturates
};

struct ExposureStack {
  std::vector<Exposure> exposures;  // times strictly increasing
};

struct MergeOptions {
  // A sample counts as saturated at this fraction of sat_level; raw values
  // do not always reach the nominal ceiling before clipping.
  double saturation_fraction = 0.98;
  // Exclude the single minimum per-exposure estimate when at least this many
  // unsaturated estimates exist.
  int min_estimates_for_exclusion = 3;
};

// Merge a bracket into scene-linear radiance with the counts-weighted
// Poisson estimator sum(y_i)/sum(t_i) over unsaturated exposures. Pixels
// saturated everywhere get sat_level/t_min, the lowest radiance that
// saturates in all images.
HdrImage merge_exposure_stack(const ExposureStack& stack, const MergeOptions& opts = {});

// Scale by 2^bias, clamp to [0,1], apply sRGB. Returns interleaved RGB8.
Image<uint8_t> tonemap_srgb(const HdrImage& img, double exposure_bias_stops);

}  // namespace lumi
