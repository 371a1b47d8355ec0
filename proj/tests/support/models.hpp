#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "curvlab/expr.hpp"
#include "curvlab/metric.hpp"
#include "curvlab/types.hpp"

namespace curvlab::test {

inline constexpr double kPi = 3.141592653589793;
inline constexpr const char* kConformalU = "0.05*sin(2*pi*x)*sin(2*pi*y)";
inline constexpr const char* kGluedU = "2*max(0, 0.04 - persq(x, y, 0.5, 0.5))^2";

inline MetricModel conformal_model() { return MetricModel::conformal(parse_field(kConformalU)); }
inline MetricModel glued_model() { return MetricModel::conformal(parse_field(kGluedU), Regularity::kC11); }

inline double conformal_u(double x, double y) { return 0.05 * std::sin(2 * kPi * x) * std::sin(2 * kPi * y); }

// K = -exp(-2u) lap u with lap u = -8 pi^2 u.
inline double conformal_gauss(double x, double y) {
  const double u = conformal_u(x, y);
  return std::exp(-2 * u) * 8 * kPi * kPi * u;
}

// u = a s^2 with s = r0^2 - r^2 inside the disc, so lap u = 8 a (2 r^2 - r0^2).
inline double glued_gauss(double x, double y) {
  const Vec2 d = periodic_displacement(Vec2(x - 0.5, y - 0.5));
  const double r2 = d.squaredNorm();
  if (r2 >= 0.04) return 0.0;
  const double s = 0.04 - r2;
  const double u = 2 * s * s;
  return -std::exp(-2 * u) * 16 * (2 * r2 - 0.04);
}

inline double glued_gauss_infimum() {
  double k = 0.0;
  for (int q = 0; q <= 200000; ++q) k = std::min(k, glued_gauss(0.5 + 0.2 * q / 200000.0, 0.5));
  return k;
}

struct Uniform {
  std::mt19937_64 engine;
  explicit Uniform(std::uint64_t seed) : engine(seed) {}
  double operator()() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
  double operator()(double a, double b) { return a + (b - a) * (*this)(); }
};

inline std::vector<double> random_simplex(Uniform& rng, std::size_t m) {
  std::vector<double> w(m);
  double s = 0.0;
  for (double& x : w) s += (x = 0.1 + rng());
  for (double& x : w) x /= s;
  return w;
}

}  // namespace curvlab::test
