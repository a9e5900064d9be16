// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#include "lumi/grid.h"

namespace lumi {

double lod_level(double contracted_radius, const HashGridConfig& cfg) {
  require(contracted_radius > 0, "lod_level: footprint radius must be positive");
  double l = -std::log(2.0 * cfg.base_resolution * contracted_radius) /
             std::log(cfg.per_level_scale);
  return std::min(l, static_cast<double>(cfg.levels - 1));
}

void lod_weights(double l_star, double bias, int levels, float* w) {
  double eff = l_star + bias;
  if (eff >= levels - 1) {
    for (int i = 0; i < levels; ++i) w[i] = 1.0f;
    return;
  }
  if (eff < 0.0) {
    // Keep the encoder non-degenerate for extreme footprints.
    w[0] = 1e-4f;
    for (int i = 1; i < levels; ++i) w[i] = 0.0f;
    return;
  }
  double fl = std::floor(eff);
  double frac = eff - fl;
  for (int i = 0; i < levels; ++i) {
    if (i <= static_cast<int>(fl))
      w[i] = 1.0f;
    else if (i == static_cast<int>(fl) + 1 && frac > 0.0)
      w[i] = static_cast<float>(frac);
    else
      w[i] = 0.0f;
  }
}

}  // namespace lumi
