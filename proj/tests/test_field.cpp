// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "lumi/field.h"

using namespace lumi;

namespace {

FieldConfig tiny_config() {
  FieldConfig fc;
  fc.grid.levels = 4;
  fc.grid.base_resolution = 4;
  fc.grid.per_level_scale = 1.5;
  fc.grid.table_size = 1u << 8;
  return fc;
}

template <typename T>
void run_chunk(const RadianceField<T>& field, FieldChunk<T>& chunk, const Vec3& dir,
               bool color = true) {
  T sh[16];
  sh_encode_deg3(dir, sh);
  field.forward_chunk(chunk, sh, color);
}

}  // namespace

TEST_CASE("eval_density: zero parameters give the rectifier at zero") {
  RadianceField<float> field(tiny_config());
  FieldChunk<float> chunk;
  chunk.n = 2;
  chunk.pos = {{0.1, 0.2, 0.3}, {-0.5, 0.4, 0.9}};
  chunk.lodw.assign(2 * 4, 1.0f);
  run_chunk(field, chunk, Vec3{0, 0, 1});
  // zero grid + zero nets: sigma = trunc_exp(0) = 1, color = sigmoid(0)
  CHECK(chunk.sigma[0] == doctest::Approx(1.0));
  CHECK(chunk.sigma[1] == doctest::Approx(1.0));
  for (float c : chunk.color) CHECK(c == doctest::Approx(0.5));
}

TEST_CASE("density is non-degenerate: doubling features changes sigma") {
  auto fc = tiny_config();
  RadianceField<double> field(fc);
  field.init_random(7);
  Rng rng(8);
  double* g = field.grid().parameters();
  for (size_t i = 0; i < field.grid().parameter_count(); ++i) g[i] = rng.uniform(-1, 1);

  FieldChunk<double> chunk;
  chunk.n = 1;
  chunk.pos = {{0.3, -0.2, 0.6}};
  chunk.lodw.assign(4, 1.0f);
  run_chunk(field, chunk, Vec3{0, 0, 1}, false);
  double sigma1 = chunk.sigma[0];
  for (size_t i = 0; i < field.grid().parameter_count(); ++i) g[i] *= 2.0;
  run_chunk(field, chunk, Vec3{0, 0, 1}, false);
  CHECK(chunk.sigma[0] != doctest::Approx(sigma1));
}

TEST_CASE("color output lies strictly inside (0,1) and depends on view") {
  auto fc = tiny_config();
  RadianceField<double> field(fc);
  field.init_random(11);
  Rng rng(12);
  double* g = field.grid().parameters();
  for (size_t i = 0; i < field.grid().parameter_count(); ++i) g[i] = rng.uniform(-1, 1);

  FieldChunk<double> chunk;
  chunk.n = 1;
  chunk.pos = {{0.25, 0.5, -0.25}};
  chunk.lodw.assign(4, 1.0f);
  run_chunk(field, chunk, Vec3{0, 0, 1});
  double c1[3] = {chunk.color[0], chunk.color[1], chunk.color[2]};
  for (double c : c1) {
    CHECK(c > 0.0);
    CHECK(c < 1.0);
  }
  run_chunk(field, chunk, Vec3{0, 0, -1});
  bool different = false;
  for (int c = 0; c < 3; ++c)
    if (std::abs(c1[c] - chunk.color[c]) > 1e-12) different = true;
  CHECK(different);
}

TEST_CASE("masked levels receive no gradient") {
  auto fc = tiny_config();
  RadianceField<double> field(fc);
  field.init_random(13);
  FieldChunk<double> chunk;
  chunk.n = 1;
  chunk.pos = {{0.3, 0.3, 0.3}};
  chunk.lodw.assign(4, 1.0f);
  chunk.lodw[2] = 0.0f;
  chunk.lodw[3] = 0.0f;
  run_chunk(field, chunk, Vec3{0, 1, 0});

  FieldGradients<double> grads = field.make_gradients();
  std::vector<double> dsigma = {1.0};
  std::vector<double> dcolor = {0.3, -0.2, 0.5};
  std::vector<double> scratch;
  field.backward_chunk(chunk, dsigma.data(), dcolor.data(), grads, scratch);

  // Entries of masked levels 2 and 3 must stay untouched. Level offsets:
  // dense levels of resolution 4,6 fit 5^3=125 and 7^3=343 > 256 -> hashed.
  // Just check: any nonzero gradient index must belong to levels 0 or 1.
  size_t level01_entries = 0;
  {
    uint64_t v0 = 5, d0 = v0 * v0 * v0;  // level0 dense 125 entries
    size_t e0 = d0 <= fc.grid.table_size ? d0 : fc.grid.table_size;
    uint64_t v1 = 7, d1 = v1 * v1 * v1;  // level1: 343 > 256 -> hashed 256
    size_t e1 = d1 <= fc.grid.table_size ? d1 : fc.grid.table_size;
    level01_entries = (e0 + e1) * fc.grid.features_per_level;
  }
  bool nonzero_in_01 = false;
  for (size_t i = 0; i < grads.grid.size(); ++i) {
    if (grads.grid[i] != 0.0) {
      CHECK(i < level01_entries);
      nonzero_in_01 = true;
    }
  }
  CHECK(nonzero_in_01);
}

TEST_CASE("constant loss means zero gradients") {
  auto fc = tiny_config();
  RadianceField<double> field(fc);
  field.init_random(14);
  FieldChunk<double> chunk;
  chunk.n = 3;
  chunk.pos = {{0.1, 0.1, 0.1}, {0.2, -0.3, 0.4}, {-0.7, 0.5, 0.1}};
  chunk.lodw.assign(3 * 4, 1.0f);
  run_chunk(field, chunk, Vec3{1, 0, 0});
  FieldGradients<double> grads = field.make_gradients();
  std::vector<double> dsigma(3, 0.0), dcolor(9, 0.0), scratch;
  field.backward_chunk(chunk, dsigma.data(), dcolor.data(), grads, scratch);
  for (double g : grads.grid) CHECK(g == 0.0);
  for (double g : grads.density) CHECK(g == 0.0);
  for (double g : grads.color) CHECK(g == 0.0);
}

TEST_CASE("field gradients match finite differences through both heads") {
  auto fc = tiny_config();
  RadianceField<double> field(fc);
  field.init_random(15);
  Rng rng(16);
  double* gp = field.grid().parameters();
  for (size_t i = 0; i < field.grid().parameter_count(); ++i) gp[i] = rng.uniform(-0.8, 0.8);

  FieldChunk<double> chunk;
  chunk.n = 2;
  chunk.pos = {{0.15, -0.35, 0.55}, {-0.4, 0.9, 1.6}};
  chunk.lodw.assign(2 * 4, 1.0f);
  chunk.lodw[3] = 0.35f;  // fractional LOD weight on the finest level
  Vec3 dir = Vec3{0.2, -0.4, 0.88}.normalized();

  std::vector<double> dsigma = {0.7, -0.3};
  std::vector<double> dcolor = {0.5, -0.1, 0.2, 0.3, 0.9, -0.6};  // [3 x n]

  auto objective = [&]() {
    FieldChunk<double> c2;
    c2.n = chunk.n;
    c2.pos = chunk.pos;
    c2.lodw = chunk.lodw;
    run_chunk(field, c2, dir);
    double total = 0;
    for (int i = 0; i < c2.n; ++i) total += dsigma[i] * c2.sigma[i];
    for (int i = 0; i < 3 * c2.n; ++i) total += dcolor[i] * c2.color[i];
    return total;
  };

  run_chunk(field, chunk, dir);
  FieldGradients<double> grads = field.make_gradients();
  std::vector<double> scratch;
  field.backward_chunk(chunk, dsigma.data(), dcolor.data(), grads, scratch);

  const double h = 1e-5;
  Rng pick(17);
  int checked = 0;
  for (int k = 0; k < 40 && checked < 15; ++k) {
    size_t i = pick.next_below(static_cast<uint32_t>(field.grid().parameter_count()));
    if (grads.grid[i] == 0.0) continue;
    double saved = gp[i];
    gp[i] = saved + h;
    double up = objective();
    gp[i] = saved - h;
    double down = objective();
    gp[i] = saved;
    CHECK(grads.grid[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-4));
    ++checked;
  }
  CHECK(checked > 0);

  std::vector<double> p(field.density_net().parameter_count());
  for (int k = 0; k < 10; ++k) {
    field.density_net().copy_params(p.data());
    size_t i = pick.next_below(static_cast<uint32_t>(p.size()));
    double saved = p[i];
    p[i] = saved + h;
    field.density_net().set_params(p.data());
    double up = objective();
    p[i] = saved - h;
    field.density_net().set_params(p.data());
    double down = objective();
    p[i] = saved;
    field.density_net().set_params(p.data());
    CHECK(grads.density[i] == doctest::Approx((up - down) / (2 * h)).epsilon(2e-4));
  }
}

TEST_CASE("estimate_normal on analytic densities") {
  // Planar ramp along +z: density increases with z, normal points to -z.
  auto ramp = [](const Vec3& p) { return 10.0 * p.z + 5.0; };
  Vec3 n;
  REQUIRE(estimate_normal(ramp, Vec3{0.1, 0.2, 0.0}, &n));
  CHECK(n.z == doctest::Approx(-1.0).epsilon(1e-9));

  // Spherical blob: normals point radially outward (negative gradient of a
  // density that decreases with radius... density high inside -> gradient
  // points inward -> normal = -gradient points outward).
  auto sphere = [](const Vec3& p) { return std::exp(-4.0 * p.dot(p)); };
  Rng rng(31);
  for (int k = 0; k < 50; ++k) {
    Vec3 p = Vec3{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}.normalized() * 0.5;
    Vec3 nn;
    REQUIRE(estimate_normal(sphere, p, &nn));
    double cosang = nn.dot(p.normalized());
    CHECK(cosang > std::cos(5.0 * 3.14159265 / 180.0));
  }

  // Uniform density: invalid flag.
  auto uniform = [](const Vec3&) { return 3.0; };
  Vec3 dummy;
  CHECK_FALSE(estimate_normal(uniform, Vec3{0, 0, 0}, &dummy));
}
