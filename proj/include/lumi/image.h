// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lumi/common.h"

namespace lumi {

// Planar-channel image. data is laid out channel-major: channel c's plane is
// data[c*width*height ...], rows top-down.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c, T fill = T(0))
      : width(w), height(h), channels(c), data(static_cast<size_t>(w) * h * c, fill) {}

  size_t plane() const { return static_cast<size_t>(width) * height; }
  T& at(int x, int y, int c) { return data[c * plane() + static_cast<size_t>(y) * width + x]; }
  const T& at(int x, int y, int c) const {
    return data[c * plane() + static_cast<size_t>(y) * width + x];
  }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

// Scene-linear radiance image with per-pixel validity.
struct HdrImage {
  Image<float> radiance;          // 3 channels unless stated otherwise
  std::vector<uint8_t> valid;     // one flag per pixel

  HdrImage() = default;
  HdrImage(int w, int h, int c = 3) : radiance(w, h, c), valid(static_cast<size_t>(w) * h, 1) {}

  int width() const { return radiance.width; }
  int height() const { return radiance.height; }
};

// PFM: "PF" (rgb) / "Pf" (gray), negative scale = little-endian, scanlines
// bottom-up.
void write_pfm(const std::string& path, const Image<float>& img);
Image<float> read_pfm(const std::string& path);

// 8-bit PNG; img.channels must be 1 or 3 (interleaving handled internally).
void write_png(const std::string& path, const Image<uint8_t>& img);
Image<uint8_t> read_png(const std::string& path);

// Peak signal-to-noise ratio over all channels, capped at 99 dB for
// identical inputs. Inputs are expected in a nominal [0,1] range.
double psnr(const Image<float>& a, const Image<float>& b);

// Mean structural similarity with an 11x11 Gaussian window (sigma 1.5),
// averaged over channels, dynamic range 1.
double ssim(const Image<float>& a, const Image<float>& b);

// Mean absolute value of the 3x3 Laplacian, averaged over channels; a cheap
// spatial-frequency-energy probe used by the LOD sweep.
double mean_abs_laplacian(const Image<float>& img);

}  // namespace lumi
