// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#include "lumi/color.h"

#include <algorithm>
#include <cmath>

namespace lumi {

namespace {
// Scene-linear 1.0 = 100 cd/m^2; PQ ceiling 10,000 cd/m^2.
constexpr double kSceneToNormalized = 100.0 / 10000.0;
constexpr double kCeilingSceneLinear = 100.0;
}  // namespace

double pq_encode(double y) {
  require(std::isfinite(y) && y >= 0.0, "pq_encode: radiance must be finite and non-negative");
  double yn = clamp(y * kSceneToNormalized, 0.0, 1.0);
  double p = std::pow(yn, PqConstants::m1);
  double num = PqConstants::c1 + PqConstants::c2 * p;
  double den = 1.0 + PqConstants::c3 * p;
  return std::pow(num / den, PqConstants::m2);
}

double pq_decode(double v) {
  require(std::isfinite(v) && v >= 0.0 && v <= 1.0, "pq_decode: input must be in [0,1]");
  double p = std::pow(v, 1.0 / PqConstants::m2);
  double num = p - PqConstants::c1;
  if (num < 0.0) num = 0.0;
  double den = PqConstants::c2 - PqConstants::c3 * p;
  double yn = std::pow(num / den, 1.0 / PqConstants::m1);
  return yn / kSceneToNormalized;
}

double srgb_oetf(double v) {
  v = clamp(v, 0.0, 1.0);
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

double srgb_eotf(double v) {
  v = clamp(v, 0.0, 1.0);
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

HdrImage merge_exposure_stack(const ExposureStack& stack, const MergeOptions& opts) {
  const auto& exps = stack.exposures;
  require(exps.size() >= 2, "merge: need at least 2 exposures");
  const int w = exps[0].raw.width, h = exps[0].raw.height, ch = exps[0].raw.channels;
  double t_min = exps[0].time_s;
  for (size_t i = 0; i < exps.size(); ++i) {
    require(exps[i].raw.width == w && exps[i].raw.height == h && exps[i].raw.channels == ch,
            "merge: exposure dimensions mismatch");
    if (i > 0)
      require(exps[i].time_s > exps[i - 1].time_s, "merge: exposure times must be increasing");
    t_min = std::min(t_min, exps[i].time_s);
  }

  HdrImage out(w, h, ch);
  const int n = static_cast<int>(exps.size());
  std::vector<double> y(n), t(n), est(n);

  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      for (int c = 0; c < ch; ++c) {
        int m = 0;
        for (int i = 0; i < n; ++i) {
          double raw = exps[i].raw.at(px, py, c);
          if (raw < opts.saturation_fraction * exps[i].sat_level) {
            y[m] = raw;
            t[m] = exps[i].time_s;
            est[m] = raw / exps[i].time_s;
            ++m;
          }
        }
        double radiance;
        if (m == 0) {
          // Saturated everywhere: the lowest radiance that saturates in all
          // images. sat_level here is the first exposure's (the stack is
          // expected to share one sensor).
          radiance = exps[0].sat_level / t_min;
        } else {
          int skip = -1;
          if (m >= opts.min_estimates_for_exclusion) {
            skip = 0;
            for (int i = 1; i < m; ++i)
              if (est[i] < est[skip]) skip = i;
          }
          double sum_y = 0, sum_t = 0;
          for (int i = 0; i < m; ++i) {
            if (i == skip) continue;
            sum_y += y[i];
            sum_t += t[i];
          }
          radiance = sum_y / sum_t;
        }
        out.radiance.at(px, py, c) = static_cast<float>(radiance);
      }
    }
  }
  return out;
}

Image<uint8_t> tonemap_srgb(const HdrImage& img, double bias) {
  require(std::isfinite(bias), "tonemap: bias must be finite");
  double gain = std::exp2(bias);
  Image<uint8_t> out(img.width(), img.height(), img.radiance.channels);
  for (int c = 0; c < img.radiance.channels; ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        double v = srgb_oetf(clamp(img.radiance.at(x, y, c) * gain, 0.0, 1.0));
        out.at(x, y, c) = static_cast<uint8_t>(std::lround(v * 255.0));
      }
  return out;
}

}  // namespace lumi
