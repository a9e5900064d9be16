// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "lumi/color.h"
#include "lumi/common.h"

using namespace lumi;

TEST_CASE("pq constants satisfy c1 + c2 == 1 + c3") {
  CHECK(PqConstants::c1 + PqConstants::c2 == 1.0 + PqConstants::c3);
}

TEST_CASE("pq_encode worked values") {
  // Ceiling: scene-linear 100 is 10,000 cd/m^2.
  CHECK(pq_encode(100.0) == 1.0);
  // Black level c1^m2, frozen from an arbitrary-precision evaluation.
  CHECK(pq_encode(0.0) == doctest::Approx(7.30955902578e-7).epsilon(1e-6));
  // 100 cd/m^2 reference point.
  CHECK(pq_encode(1.0) == doctest::Approx(0.508078421517).epsilon(1e-9));
  CHECK(pq_encode(2.5) == doctest::Approx(0.602559154991).epsilon(1e-9));
  CHECK_THROWS_AS(pq_encode(-0.1), Error);
  CHECK_THROWS_AS(pq_encode(std::nan("")), Error);
}

TEST_CASE("pq_encode is strictly increasing on a 10001-point grid") {
  double prev = -1;
  for (int i = 0; i <= 10000; ++i) {
    double y = 100.0 * i / 10000.0;
    double v = pq_encode(y);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("pq decode inverts encode over 22 stops") {
  CHECK(pq_decode(1.0) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(pq_decode(0.5081) == doctest::Approx(1.0002150252).epsilon(1e-6));
  CHECK(pq_decode(pq_encode(2.5)) == doctest::Approx(2.5).epsilon(1e-6));
  // The 22-stop capture span tops out above the PQ ceiling (scene-linear
  // 100); the roundtrip contract holds on the invertible part of it.
  for (int s = -14; s <= 6; ++s) {
    double y = std::ldexp(1.0, s);
    CHECK(pq_decode(pq_encode(y)) == doctest::Approx(y).epsilon(1e-6));
  }
  CHECK(pq_decode(pq_encode(100.0)) == doctest::Approx(100.0).epsilon(1e-9));
  CHECK_THROWS_AS(pq_decode(-0.01), Error);
  CHECK_THROWS_AS(pq_decode(1.01), Error);
}

namespace {

ExposureStack make_stack(const std::vector<double>& values, const std::vector<double>& times,
                         double sat) {
  ExposureStack st;
  for (size_t i = 0; i < times.size(); ++i) {
    Exposure e;
    e.raw = Image<float>(1, 1, 1, static_cast<float>(values[i]));
    e.time_s = times[i];
    e.sat_level = sat;
    st.exposures.push_back(e);
  }
  return st;
}

}  // namespace

TEST_CASE("merge: exact on noiseless data") {
  auto st = make_stack({0.1, 0.4}, {1.0, 4.0}, 1e9);
  HdrImage out = merge_exposure_stack(st);
  CHECK(out.radiance.at(0, 0, 0) == doctest::Approx(0.1));
}

TEST_CASE("merge: all-saturated pixels get sat_level / t_min") {
  auto st = make_stack({16384, 16384, 16384}, {1.0 / 3200, 1.0 / 800, 1.0 / 200}, 16384);
  HdrImage out = merge_exposure_stack(st);
  CHECK(out.radiance.at(0, 0, 0) == doctest::Approx(16384.0 * 3200.0));
}

TEST_CASE("merge: minimum-estimate exclusion drops the low outlier") {
  // Three unsaturated estimates {0.10, 0.02, 0.10}; brute force over
  // inclusion subsets confirms exclusion of the minimum leaves 0.10.
  auto st = make_stack({0.10, 0.02, 0.10}, {1.0, 1.0 + 1e-9, 1.0 + 2e-9}, 1e9);
  HdrImage out = merge_exposure_stack(st);
  CHECK(out.radiance.at(0, 0, 0) == doctest::Approx(0.10).epsilon(1e-6));

  // With only two unsaturated estimates no exclusion happens.
  auto st2 = make_stack({0.10, 0.02}, {1.0, 1.0 + 1e-9}, 1e9);
  HdrImage out2 = merge_exposure_stack(st2);
  CHECK(out2.radiance.at(0, 0, 0) == doctest::Approx(0.06).epsilon(1e-6));
}

TEST_CASE("merge: saturation rule dominates unsaturated estimates") {
  // An all-saturated pixel must come out at least as bright as any pixel
  // with usable samples in the same stack.
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    double sat = 1000;
    std::vector<double> times = {0.01, 0.04, 0.16};
    double unsat_val = rng.uniform(0.0, 0.97) * sat;
    auto st = make_stack({unsat_val, sat, sat}, times, sat);
    auto sat_st = make_stack({sat, sat, sat}, times, sat);
    double a = merge_exposure_stack(st).radiance.at(0, 0, 0);
    double b = merge_exposure_stack(sat_st).radiance.at(0, 0, 0);
    CHECK(b >= a);
  }
}

TEST_CASE("merge: dimension mismatch raises") {
  ExposureStack st;
  Exposure a, b;
  a.raw = Image<float>(2, 2, 1);
  a.time_s = 1;
  a.sat_level = 10;
  b.raw = Image<float>(3, 2, 1);
  b.time_s = 2;
  b.sat_level = 10;
  st.exposures = {a, b};
  CHECK_THROWS_AS(merge_exposure_stack(st), Error);
}

TEST_CASE("tonemap: scaling law and sRGB endpoints") {
  HdrImage img(2, 1, 3);
  for (int c = 0; c < 3; ++c) {
    img.radiance.at(0, 0, c) = 1.0f;
    img.radiance.at(1, 0, c) = 0.5f;
  }
  auto out0 = tonemap_srgb(img, 0.0);
  CHECK(out0.at(0, 0, 0) == 255);
  // radiance 0.5 at +1 stop equals radiance 1.0 at 0 stops
  auto out1 = tonemap_srgb(img, 1.0);
  CHECK(out1.at(1, 0, 0) == out0.at(0, 0, 0));

  // 145 at -8 stops is linear 145/256 before the transfer
  HdrImage bright(1, 1, 3);
  for (int c = 0; c < 3; ++c) bright.radiance.at(0, 0, c) = 145.0f;
  auto out2 = tonemap_srgb(bright, -8.0);
  double expect = srgb_oetf(145.0 / 256.0);
  CHECK(out2.at(0, 0, 0) == static_cast<uint8_t>(std::lround(expect * 255.0)));
}

TEST_CASE("merge is unbiased under Poisson noise") {
  // Smaller version of the acceptance criterion: two radiance levels,
  // 20000 trials each, 9 exposures spanning 8 stops.
  Rng rng(99);
  std::vector<double> times;
  for (int i = -4; i <= 4; ++i) times.push_back(std::ldexp(0.02, i));
  const double photon_scale = 5e3;
  for (double truth : {0.5, 8.0}) {
    double sum = 0;
    const int trials = 20000;
    for (int tr = 0; tr < trials; ++tr) {
      ExposureStack st;
      for (double t : times) {
        Exposure e;
        e.time_s = t;
        e.sat_level = 4.0;
        double lam = truth * t * photon_scale;
        double counts = static_cast<double>(rng.poisson(lam)) / photon_scale;
        e.raw = Image<float>(1, 1, 1, static_cast<float>(std::min(counts, e.sat_level)));
        st.exposures.push_back(e);
      }
      sum += merge_exposure_stack(st).radiance.at(0, 0, 0);
    }
    double mean = sum / trials;
    CHECK(std::abs(mean - truth) / truth < 0.01);
  }
}
