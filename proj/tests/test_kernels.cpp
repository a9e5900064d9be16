// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

// Every compiled-and-runnable SIMD variant must agree with the scalar
// reference on randomized shapes, including ragged tails.

#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "lumi/common.h"
#include "lumi/simd.h"

using namespace lumi;

namespace {

std::vector<float> random_vec(Rng& rng, size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return v;
}

bool close(const std::vector<float>& a, const std::vector<float>& b, double rel) {
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    double diff = std::abs(static_cast<double>(a[i]) - b[i]);
    double scale =
        std::max({std::abs(static_cast<double>(a[i])), std::abs(static_cast<double>(b[i])), 1.0});
    if (diff > rel * scale) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("simd variants match the scalar reference") {
  int count = 0;
  auto kernels = simd::available(&count);
  REQUIRE(count >= 1);
  CHECK(std::string(kernels[0]->name) == "scalar");

  Rng rng(2024);
  const int shapes[][3] = {{64, 32, 32}, {17, 16, 7}, {3, 64, 1}, {64, 64, 33}, {1, 5, 9}};

  for (int k = 1; k < count; ++k) {
    const simd::Kernels& v = *kernels[k];
    INFO("variant: ", v.name);
    for (auto [rows, cols, n] : shapes) {
      auto W = random_vec(rng, static_cast<size_t>(rows) * cols);
      auto b = random_vec(rng, rows);
      auto x = random_vec(rng, static_cast<size_t>(cols) * n);
      for (bool relu : {false, true}) {
        std::vector<float> y_ref(static_cast<size_t>(rows) * n), y_v = y_ref;
        simd::scalar::dense_forward<float>(rows, cols, n, W.data(), b.data(), x.data(),
                                           y_ref.data(), relu);
        v.dense_forward(rows, cols, n, W.data(), b.data(), x.data(), y_v.data(), relu);
        CHECK(close(y_ref, y_v, 1e-5));
      }

      auto dy = random_vec(rng, static_cast<size_t>(rows) * n);
      std::vector<float> dx_ref(static_cast<size_t>(cols) * n, 0.1f), dx_v = dx_ref;
      simd::scalar::dense_backward_data<float>(rows, cols, n, W.data(), dy.data(), dx_ref.data());
      v.dense_backward_data(rows, cols, n, W.data(), dy.data(), dx_v.data());
      CHECK(close(dx_ref, dx_v, 1e-5));

      std::vector<float> dW_ref(static_cast<size_t>(rows) * cols, 0.05f), dW_v = dW_ref;
      std::vector<float> db_ref(rows, -0.2f), db_v = db_ref;
      simd::scalar::dense_backward_weights<float>(rows, cols, n, dy.data(), x.data(),
                                                  dW_ref.data(), db_ref.data());
      v.dense_backward_weights(rows, cols, n, dy.data(), x.data(), dW_v.data(), db_v.data());
      CHECK(close(dW_ref, dW_v, 1e-5));
      CHECK(close(db_ref, db_v, 1e-5));
    }

    for (size_t m : {size_t(1), size_t(7), size_t(16), size_t(1003)}) {
      auto ybuf = random_vec(rng, m);
      auto d_ref = random_vec(rng, m);
      auto d_v = d_ref;
      simd::scalar::relu_backward<float>(m, ybuf.data(), d_ref.data());
      v.relu_backward(m, ybuf.data(), d_v.data());
      CHECK(close(d_ref, d_v, 0.0));

      auto xa = random_vec(rng, m);
      auto ya_ref = random_vec(rng, m);
      auto ya_v = ya_ref;
      simd::scalar::axpy<float>(m, 0.37f, xa.data(), ya_ref.data());
      v.axpy(m, 0.37f, xa.data(), ya_v.data());
      CHECK(close(ya_ref, ya_v, 1e-6));

      float s_ref = simd::scalar::sqnorm<float>(m, xa.data());
      float s_v = v.sqnorm(m, xa.data());
      CHECK(std::abs(s_ref - s_v) <= 1e-4 * std::max(1.0f, s_ref));

      auto p_ref = random_vec(rng, m), g = random_vec(rng, m);
      auto mom_ref = random_vec(rng, m, 0.0, 0.1), vel_ref = random_vec(rng, m, 0.0, 0.1);
      auto p_v = p_ref, mom_v = mom_ref, vel_v = vel_ref;
      simd::scalar::adam_step<float>(m, p_ref.data(), g.data(), mom_ref.data(), vel_ref.data(),
                                     0.01f, 0.9f, 0.99f, 1e-15f, 1.5f, 1.1f);
      v.adam_step(m, p_v.data(), g.data(), mom_v.data(), vel_v.data(), 0.01f, 0.9f, 0.99f,
                  1e-15f, 1.5f, 1.1f);
      CHECK(close(p_ref, p_v, 1e-4));
      CHECK(close(mom_ref, mom_v, 1e-5));
      CHECK(close(vel_ref, vel_v, 1e-5));
    }
  }
}

TEST_CASE("active kernel table is one of the available variants") {
  int count = 0;
  auto kernels = simd::available(&count);
  const simd::Kernels& act = simd::active();
  bool found = false;
  for (int i = 0; i < count; ++i)
    if (kernels[i] == &act) found = true;
  CHECK(found);
}

TEST_CASE("double path always uses the scalar reference") {
  std::vector<double> w = {1, 2, 3, 4}, b = {0.5, -0.5}, x = {1, 1, 2, 2}, y(4, 0.0);
  simd::dense_forward<double>(2, 2, 2, w.data(), b.data(), x.data(), y.data(), false);
  CHECK(y[0] == doctest::Approx(1 * 1 + 2 * 2 + 0.5));
  CHECK(y[2] == doctest::Approx(3 * 1 + 4 * 2 - 0.5));
}
