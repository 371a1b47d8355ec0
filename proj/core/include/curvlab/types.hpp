#pragma once

#include <array>
#include <cmath>

#include <Eigen/Dense>

namespace curvlab {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;

/// Shortest signed representative of z modulo 1, in [-1/2, 1/2).
inline double periodic_displacement(double z) { return z - std::floor(z + 0.5); }

inline Vec2 periodic_displacement(const Vec2& d) {
  return {periodic_displacement(d.x()), periodic_displacement(d.y())};
}

/// Coordinate of a point reduced to [0, 1).
inline double wrap_unit(double z) {
  const double w = z - std::floor(z);
  return w >= 1.0 ? 0.0 : w;
}

inline Vec2 wrap_unit(const Vec2& p) { return {wrap_unit(p.x()), wrap_unit(p.y())}; }

/// Distance on the flat unit torus.
inline double flat_torus_distance(const Vec2& a, const Vec2& b) {
  return periodic_displacement(Vec2(b - a)).norm();
}

/// Metric value and coordinate derivatives at one point. Second derivatives
/// are indexed xx, xy, yy.
struct LocalGeometry {
  Mat2 g = Mat2::Identity();
  std::array<Mat2, 2> dg{Mat2::Zero(), Mat2::Zero()};
  std::array<Mat2, 3> d2g{Mat2::Zero(), Mat2::Zero(), Mat2::Zero()};

  const Mat2& second(int a, int b) const { return d2g[a + b]; }
};

/// Smallest generalized eigenvalue of the symmetric pencil (a, b), b SPD,
/// and a corresponding eigenvector normalized to unit b-length.
struct GeneralizedEigen {
  double lambda_min;
  double lambda_max;
  Vec2 v_min;
};

GeneralizedEigen generalized_eigen(const Mat2& a, const Mat2& b);

}  // namespace curvlab
