// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#include "lumi/image.h"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace lumi {

namespace {
bool host_little_endian() { return std::endian::native == std::endian::little; }
}  // namespace

void write_pfm(const std::string& path, const Image<float>& img) {
  require(img.channels == 1 || img.channels == 3, "pfm: 1 or 3 channels only");
  std::ofstream f(path, std::ios::binary);
  require(f.good(), "pfm: cannot open for writing: " + path);
  f << (img.channels == 3 ? "PF" : "Pf") << "\n"
    << img.width << " " << img.height << "\n"
    << (host_little_endian() ? "-1.0" : "1.0") << "\n";
  // bottom-up scanlines, interleaved samples
  std::vector<float> row(static_cast<size_t>(img.width) * img.channels);
  for (int y = img.height - 1; y >= 0; --y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) row[static_cast<size_t>(x) * img.channels + c] = img.at(x, y, c);
    f.write(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
  }
  require(f.good(), "pfm: write failed: " + path);
}

Image<float> read_pfm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "pfm: cannot open: " + path);
  std::string magic;
  f >> magic;
  require(magic == "PF" || magic == "Pf", "pfm: bad magic in " + path);
  int w, h;
  double scale;
  f >> w >> h >> scale;
  require(w > 0 && h > 0, "pfm: bad dimensions in " + path);
  f.get();  // single whitespace after the header
  const int ch = magic == "PF" ? 3 : 1;
  const bool file_le = scale < 0;
  Image<float> img(w, h, ch);
  std::vector<float> row(static_cast<size_t>(w) * ch);
  for (int y = h - 1; y >= 0; --y) {
    f.read(reinterpret_cast<char*>(row.data()), row.size() * sizeof(float));
    require(f.good(), "pfm: truncated file: " + path);
    if (file_le != host_little_endian()) {
      for (auto& v : row) {
        uint32_t bits = std::bit_cast<uint32_t>(v);
        bits = __builtin_bswap32(bits);
        v = std::bit_cast<float>(bits);
      }
    }
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) img.at(x, y, c) = row[static_cast<size_t>(x) * ch + c];
  }
  return img;
}

void write_png(const std::string& path, const Image<uint8_t>& img) {
  require(img.channels == 1 || img.channels == 3, "png: 1 or 3 channels only");
  png_image pi = {};
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width);
  pi.height = static_cast<png_uint_32>(img.height);
  pi.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<uint8_t> interleaved(static_cast<size_t>(img.width) * img.height * img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        interleaved[(static_cast<size_t>(y) * img.width + x) * img.channels + c] = img.at(x, y, c);
  require(png_image_write_to_file(&pi, path.c_str(), 0, interleaved.data(), 0, nullptr) != 0,
          "png: write failed: " + path);
}

Image<uint8_t> read_png(const std::string& path) {
  png_image pi = {};
  pi.version = PNG_IMAGE_VERSION;
  require(png_image_begin_read_from_file(&pi, path.c_str()) != 0, "png: cannot open: " + path);
  const int ch = PNG_IMAGE_PIXEL_CHANNELS(pi.format) >= 3 ? 3 : 1;
  pi.format = ch == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<uint8_t> interleaved(PNG_IMAGE_SIZE(pi));
  require(png_image_finish_read(&pi, nullptr, interleaved.data(), 0, nullptr) != 0,
          "png: read failed: " + path);
  Image<uint8_t> img(static_cast<int>(pi.width), static_cast<int>(pi.height), ch);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < ch; ++c)
        img.at(x, y, c) = interleaved[(static_cast<size_t>(y) * img.width + x) * ch + c];
  return img;
}

double psnr(const Image<float>& a, const Image<float>& b) {
  require(a.same_shape(b), "psnr: shape mismatch");
  double mse = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double d = static_cast<double>(a.data[i]) - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse <= 0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

namespace {

std::vector<double> gaussian_kernel_11() {
  std::vector<double> k(11);
  double sum = 0;
  for (int i = 0; i < 11; ++i) {
    double d = i - 5;
    k[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable Gaussian blur with edge clamping.
Image<double> gauss_blur(const Image<double>& in) {
  static const std::vector<double> k = gaussian_kernel_11();
  Image<double> tmp(in.width, in.height, in.channels), out(in.width, in.height, in.channels);
  for (int c = 0; c < in.channels; ++c)
    for (int y = 0; y < in.height; ++y)
      for (int x = 0; x < in.width; ++x) {
        double acc = 0;
        for (int i = -5; i <= 5; ++i)
          acc += k[i + 5] * in.at(clamp(x + i, 0, in.width - 1), y, c);
        tmp.at(x, y, c) = acc;
      }
  for (int c = 0; c < in.channels; ++c)
    for (int y = 0; y < in.height; ++y)
      for (int x = 0; x < in.width; ++x) {
        double acc = 0;
        for (int i = -5; i <= 5; ++i)
          acc += k[i + 5] * tmp.at(x, clamp(y + i, 0, in.height - 1), c);
        out.at(x, y, c) = acc;
      }
  return out;
}

Image<double> to_double(const Image<float>& in) {
  Image<double> out(in.width, in.height, in.channels);
  for (size_t i = 0; i < in.data.size(); ++i) out.data[i] = in.data[i];
  return out;
}

}  // namespace

double ssim(const Image<float>& af, const Image<float>& bf) {
  require(af.same_shape(bf), "ssim: shape mismatch");
  constexpr double kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;
  Image<double> a = to_double(af), b = to_double(bf);
  Image<double> ab(a.width, a.height, a.channels), aa = ab, bb = ab;
  for (size_t i = 0; i < a.data.size(); ++i) {
    ab.data[i] = a.data[i] * b.data[i];
    aa.data[i] = a.data[i] * a.data[i];
    bb.data[i] = b.data[i] * b.data[i];
  }
  Image<double> mu_a = gauss_blur(a), mu_b = gauss_blur(b);
  Image<double> s_ab = gauss_blur(ab), s_aa = gauss_blur(aa), s_bb = gauss_blur(bb);
  double total = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double ma = mu_a.data[i], mb = mu_b.data[i];
    double cov = s_ab.data[i] - ma * mb;
    double va = s_aa.data[i] - ma * ma;
    double vb = s_bb.data[i] - mb * mb;
    double num = (2 * ma * mb + kC1) * (2 * cov + kC2);
    double den = (ma * ma + mb * mb + kC1) * (va + vb + kC2);
    total += num / den;
  }
  return total / static_cast<double>(a.data.size());
}

double mean_abs_laplacian(const Image<float>& img) {
  double total = 0;
  size_t count = 0;
  for (int c = 0; c < img.channels; ++c)
    for (int y = 1; y < img.height - 1; ++y)
      for (int x = 1; x < img.width - 1; ++x) {
        double lap = -4.0 * img.at(x, y, c) + img.at(x - 1, y, c) + img.at(x + 1, y, c) +
                     img.at(x, y - 1, c) + img.at(x, y + 1, c);
        total += std::abs(lap);
        ++count;
      }
  return count ? total / static_cast<double>(count) : 0.0;
}

}  // namespace lumi
