#pragma once

#include <vector>

#include "curvlab/metric_field.hpp"
#include "curvlab/types.hpp"

namespace curvlab {

/// Solution of s' + s^2 + H = 0 (curvature +H), which blows up to -inf.
double riccati_lower(double h, double s0, double t);
/// Solution of s' + s^2 - H = 0 (curvature -H).
double riccati_upper(double h, double s0, double t);
/// First time the lower branch reaches -inf (infinity if never).
double riccati_blowup(double h, double s0);

struct RiccatiEnvelope {
  double h = 0.0;
  std::vector<double> s0;
  std::vector<double> t;
  /// lower[i][k], upper[i][k] for initial value s0[i] at time t[k].
  std::vector<std::vector<double>> lower, upper;
  std::vector<double> blowup;
  /// Set when grid times at or beyond a blow-up time were dropped.
  bool truncated = false;
};

RiccatiEnvelope riccati_envelope(double h, const std::vector<double>& s0, const std::vector<double>& t_grid);

struct RiccatiSolution {
  std::vector<double> t;
  std::vector<Mat2> u;
  std::vector<double> trace;
};

/// RK4 for U' + U^2 + K = 0 on [0, t_end] with K sampled uniformly at
/// 2M + 1 points (t = 0, t_end / 2M, ...); the step is 2 t_end / 2M and the
/// solution is reported at M + 1 points.
RiccatiSolution riccati_integrate(const std::vector<Mat2>& k_samples, const Mat2& u0, double t_end);

/// K_ij = g(R(e_i, v) v, e_j) in a parallel g-orthonormal frame along the
/// geodesic from y with velocity w, sampled `intervals` times per unit time
/// on [0, t_end] (intervals >= 16).
struct JacobiCurvaturePath {
  std::vector<double> t;
  std::vector<Mat2> k;
  /// max over samples of the largest |eigenvalue| of K.
  double sup_abs_eigen = 0.0;
};

JacobiCurvaturePath jacobi_curvature_path(const MetricField& metric, const Vec2& y, const Vec2& w, double t_end,
                                          int intervals);

/// Largest amount by which the eigenvalues of U leave [min s_H, max s_-H]
/// (0 when inside). Times past a blow-up are skipped.
double sandwich_violation(double h, const RiccatiSolution& solution);

}  // namespace curvlab
