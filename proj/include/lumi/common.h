// Copyright 2026 Lumifield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace lumi {

// ---------------------------------------------------------------------------
// Small vector math. Geometry runs in double; the field math is templated and
// uses float in production (see simd.h).
// ---------------------------------------------------------------------------

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3() = default;
  Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  double linf() const { return std::max(std::abs(x), std::max(std::abs(y), std::abs(z))); }
  Vec3 normalized() const { return *this / norm(); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Rigid transform, world <- camera. Rotation is row-major.
struct Pose {
  std::array<double, 9> rot = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  Vec3 origin;

  Vec3 rotate(const Vec3& v) const {
    return {rot[0] * v.x + rot[1] * v.y + rot[2] * v.z,
            rot[3] * v.x + rot[4] * v.y + rot[5] * v.z,
            rot[6] * v.x + rot[7] * v.y + rot[8] * v.z};
  }
  Vec3 apply(const Vec3& p) const { return rotate(p) + origin; }
};

// ---------------------------------------------------------------------------
// Error reporting
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

// ---------------------------------------------------------------------------
// Deterministic RNG (pcg32). std::mt19937 is portable but the standard
// distributions are not; we roll the few we need on top of pcg32 so that
// seeded runs are bit-reproducible everywhere.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(uint64_t seed = 0x853c49e6748fea9bULL, uint64_t stream = 0xda3e39cb94b95bdbULL) {
    state_ = 0;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  uint32_t next_u32() {
    uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    uint32_t rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  // Unbiased bounded integer in [0, bound)
  uint32_t next_below(uint32_t bound) {
    uint32_t threshold = (-bound) % bound;
    for (;;) {
      uint32_t r = next_u32();
      if (r >= threshold) return r % bound;
    }
  }

  double uniform() { return next_u32() * (1.0 / 4294967296.0); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    // Box-Muller; one value per call keeps the stream position predictable.
    double u1 = std::max(uniform(), 1e-12);
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Poisson via inversion for small lambda, PTRS-style normal approx fallback
  // is avoided: we use the exact multiplication method below 30 and a
  // rejection-free sum-of-gammas split above, keeping draws reproducible.
  uint64_t poisson(double lambda) {
    uint64_t total = 0;
    while (lambda > 30.0) {
      // Split off a Gamma-distributed chunk: if X ~ Gamma(m, 1) exceeds the
      // remaining rate, the count is Binomial-conditioned below it; the
      // standard recursive decomposition (Ahrens-Dieter) keeps exactness.
      double m = std::floor(lambda * 7.0 / 8.0);
      double x = gamma_int(static_cast<uint64_t>(m));
      if (x >= lambda) {
        return total + binomial(static_cast<uint64_t>(m) - 1, lambda / x);
      }
      total += static_cast<uint64_t>(m);
      lambda -= x;
    }
    // Multiplication method
    double limit = std::exp(-lambda);
    double prod = uniform();
    uint64_t n = 0;
    while (prod > limit) {
      prod *= uniform();
      ++n;
    }
    return total + n;
  }

 private:
  double gamma_int(uint64_t shape) {
    // Sum of `shape` Exp(1) draws would be slow for large shape; use the
    // Marsaglia-Tsang squeeze which is exact for shape >= 1.
    double d = static_cast<double>(shape) - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0) continue;
      v = v * v * v;
      double u = std::max(uniform(), 1e-12);
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
  }

  uint64_t binomial(uint64_t n, double p) {
    // n is at most ~30/ln factor here; plain Bernoulli loop is fine.
    uint64_t k = 0;
    for (uint64_t i = 0; i < n; ++i)
      if (uniform() < p) ++k;
    return k;
  }

  uint64_t state_;
  uint64_t inc_;
};

// ---------------------------------------------------------------------------
// Misc
// ---------------------------------------------------------------------------

template <typename T>
T clamp(T v, T lo, T hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

inline bool almost_equal(double a, double b, double rel, double abs_tol = 0.0) {
  double diff = std::abs(a - b);
  return diff <= abs_tol || diff <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace lumi
