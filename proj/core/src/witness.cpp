#include <algorithm>
#include <cmath>

#include "curvlab/entropy.hpp"
#include "curvlab/error.hpp"
#include "curvlab/geodesic.hpp"
#include "curvlab/io.hpp"

namespace curvlab {

LocalQuadraticPotential build_witness_potential(const MetricField& metric, const Vec2& x_star, const Vec2& v,
                                                double r_plateau, const Mat2& hessian) {
  const LocalGeometry geo = metric.at(x_star, 1);
  const Christoffel gamma = christoffel_at(geo);
  const Vec2 gv = geo.g * v;
  Mat2 a = 0.5 * (hessian + hessian.transpose());
  for (int l = 0; l < 2; ++l) a -= gv(l) * gamma[l];
  LocalQuadraticPotential phi(x_star, -gv, a, r_plateau);

  const Vec2 grad = riemannian_gradient(metric, phi, x_star);
  const Mat2 hess = riemannian_hessian(metric, phi, x_star);
  const double grad_err = (grad + v).cwiseAbs().maxCoeff();
  const double hess_err = (hess - 0.5 * (hessian + hessian.transpose())).cwiseAbs().maxCoeff();
  if (grad_err > 1e-6 || hess_err > 1e-6)
    throw Error(ErrorCode::kVerification, "witness potential check failed: gradient error " + format_double(grad_err) +
                                              ", Hessian error " + format_double(hess_err));
  return phi;
}

CIdentityReport c_second_derivative_identity(const MetricField& metric, const Vec2& x_star, const Vec2& v, int steps,
                                             double step) {
  const LocalQuadraticPotential phi = build_witness_potential(metric, x_star, v);
  const double h = step;
  const FlowJacobian fj = flow_jacobian(metric, phi, x_star, {-2.0 * h, -h, 0.0, h, 2.0 * h}, steps);
  const auto& c = fj.log_det;
  const double c2 = (-c[0] + 16.0 * c[1] - 30.0 * c[2] + 16.0 * c[3] - c[4]) / (12.0 * h * h);
  const LocalGeometry geo = metric.at(x_star, 2);
  const PointCurvature pc = curvature_at(geo);
  CIdentityReport r;
  r.x_star = x_star;
  r.v = v;
  r.step = h;
  r.lhs = -c2;
  r.rhs = v.dot(pc.ric * v);
  r.abs_error = std::abs(r.lhs - r.rhs);
  r.relative_error = std::abs(r.rhs) > 0.0 ? r.abs_error / std::abs(r.rhs) : r.abs_error;
  return r;
}

PointwiseConvexityReport pointwise_convexity_check(const MetricField& metric, const Vec2& x_star, const Vec2& v,
                                                   double k, double delta, const std::vector<double>& t_grid,
                                                   int steps) {
  if (t_grid.size() < 3) throw Error(ErrorCode::kInvalidArgument, "pointwise check needs at least three times");
  if (!std::is_sorted(t_grid.begin(), t_grid.end()) ||
      std::adjacent_find(t_grid.begin(), t_grid.end()) != t_grid.end())
    throw Error(ErrorCode::kInvalidArgument, "pointwise check needs strictly increasing times");
  const LocalQuadraticPotential phi = build_witness_potential(metric, x_star, v);
  const double vol = total_volume(metric, 128);
  const double gvv = v.dot(metric.at(x_star, 0).g * v);
  const double kk = k - 0.5 * delta;
  const FlowJacobian fj = flow_jacobian(metric, phi, x_star, t_grid, steps);
  PointwiseConvexityReport r;
  r.t = t_grid;
  r.scale = gvv;
  for (std::size_t q = 0; q < t_grid.size(); ++q) {
    const double c = -std::log(vol) + fj.log_det[q];
    r.value.push_back(-c - 0.5 * kk * t_grid[q] * t_grid[q] * gvv);
  }
  r.verdict = true;
  for (std::size_t q = 1; q + 1 < t_grid.size(); ++q) {
    const double h0 = t_grid[q] - t_grid[q - 1], h1 = t_grid[q + 1] - t_grid[q];
    const double d = 2.0 * ((r.value[q + 1] - r.value[q]) / h1 - (r.value[q] - r.value[q - 1]) / h0) / (h0 + h1);
    r.second_difference.push_back(d);
    if (d < -1e-8 * r.scale) r.verdict = false;
  }
  const CIdentityReport ci = c_second_derivative_identity(metric, x_star, v, steps);
  r.margin_at_zero = ci.lhs - kk * gvv;
  return r;
}

WitnessExperiment witness_experiment(const MetricField& metric, const Potential& phi, const Vec2& x_star, double k,
                                     const std::vector<double>& radii, const std::vector<double>& t_list, int n,
                                     int steps) {
  if (radii.size() < 2) throw Error(ErrorCode::kInvalidArgument, "concentration sweep needs at least two radii");
  WitnessExperiment ex;
  ex.x_star = x_star;
  ex.v = -riemannian_gradient(metric, phi, x_star);
  ex.lambda = k;
  ex.radii = radii;
  std::vector<double> t_all = t_list;
  t_all.push_back(0.0);
  t_all.push_back(1.0);
  std::sort(t_all.begin(), t_all.end());
  t_all.erase(std::unique(t_all.begin(), t_all.end()), t_all.end());
  ex.t = t_all;
  const double vol = total_volume(metric, n);
  const EntropyFunction u = EntropyFunction::boltzmann();
  for (double r : radii) {
    const BumpMeasure mu = bump_measure(metric, x_star, r, n);
    const DisplacementFamily fam = displacement_interpolation(metric, phi, mu, t_all, steps);
    ex.margins.push_back(lagrangian_margins(u, fam, fam.weights, k, vol));
  }
  // Neville extrapolation to r = 0 in the variable r^2
  for (std::size_t q = 0; q < t_all.size(); ++q) {
    std::vector<double> p(radii.size());
    for (std::size_t a = 0; a < radii.size(); ++a) p[a] = ex.margins[a][q];
    for (std::size_t lev = 1; lev < radii.size(); ++lev)
      for (std::size_t a = 0; a + lev < radii.size(); ++a) {
        const double xa = radii[a] * radii[a], xb = radii[a + lev] * radii[a + lev];
        p[a] = (xa * p[a + 1] - xb * p[a]) / (xa - xb);
      }
    ex.extrapolated.push_back(p[0]);
  }
  const FlowJacobian fj = flow_jacobian(metric, phi, x_star, t_all, steps);
  const double gvv = ex.v.dot(metric.at(x_star, 0).g * ex.v);
  const std::size_t k0 = std::find(t_all.begin(), t_all.end(), 0.0) - t_all.begin();
  const std::size_t k1 = std::find(t_all.begin(), t_all.end(), 1.0) - t_all.begin();
  for (std::size_t q = 0; q < t_all.size(); ++q) {
    const double t = t_all[q];
    const double c = fj.log_det[q], c0 = fj.log_det[k0], c1 = fj.log_det[k1];
    ex.pointwise.push_back(-t * c1 - (1.0 - t) * c0 - 0.5 * k * t * (1.0 - t) * gvv + c);
    ex.max_gap = std::max(ex.max_gap, std::abs(ex.pointwise.back() - ex.extrapolated[q]));
  }
  return ex;
}

}  // namespace curvlab
