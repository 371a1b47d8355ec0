#include "curvlab/riccati.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "curvlab/curvature.hpp"
#include "curvlab/error.hpp"
#include "curvlab/geodesic.hpp"

namespace curvlab {

double riccati_lower(double h, double s0, double t) {
  if (h < 0.0) throw Error(ErrorCode::kInvalidArgument, "curvature band must be non-negative");
  if (h == 0.0) return s0 / (1.0 + t * s0);
  const double r = std::sqrt(h);
  return -r * std::tan(t * r - std::atan(s0 / r));
}

double riccati_upper(double h, double s0, double t) {
  if (h < 0.0) throw Error(ErrorCode::kInvalidArgument, "curvature band must be non-negative");
  if (h == 0.0) return s0 / (1.0 + t * s0);
  const double r = std::sqrt(h);
  const double z = s0 / r;
  if (std::abs(z) < 1.0) return r * std::tanh(t * r + std::atanh(z));
  if (z == 1.0 || z == -1.0) return s0;
  // |s0| > sqrt(H): coth form of the same solution
  const double a = 0.5 * std::log((z + 1.0) / (z - 1.0));
  return r / std::tanh(t * r + a);
}

double riccati_blowup(double h, double s0) {
  if (h == 0.0) return s0 < 0.0 ? -1.0 / s0 : std::numeric_limits<double>::infinity();
  const double r = std::sqrt(h);
  return (0.5 * std::numbers::pi + std::atan(s0 / r)) / r;
}

RiccatiEnvelope riccati_envelope(double h, const std::vector<double>& s0, const std::vector<double>& t_grid) {
  if (h < 0.0) throw Error(ErrorCode::kInvalidArgument, "curvature band must be non-negative");
  RiccatiEnvelope env;
  env.h = h;
  env.s0 = s0;
  double first = std::numeric_limits<double>::infinity();
  for (double s : s0) {
    env.blowup.push_back(riccati_blowup(h, s));
    first = std::min(first, env.blowup.back());
  }
  for (double t : t_grid) {
    if (t >= first) {
      env.truncated = true;
      continue;
    }
    env.t.push_back(t);
  }
  env.lower.assign(s0.size(), {});
  env.upper.assign(s0.size(), {});
  for (std::size_t i = 0; i < s0.size(); ++i)
    for (double t : env.t) {
      env.lower[i].push_back(riccati_lower(h, s0[i], t));
      env.upper[i].push_back(riccati_upper(h, s0[i], t));
    }
  return env;
}

RiccatiSolution riccati_integrate(const std::vector<Mat2>& k, const Mat2& u0, double t_end) {
  if (k.size() < 3 || k.size() % 2 == 0)
    throw Error(ErrorCode::kInvalidArgument, "curvature samples must be 2M + 1 >= 3 uniform points");
  const std::size_t steps = (k.size() - 1) / 2;
  const double h = t_end / steps;
  auto f = [](const Mat2& u, const Mat2& kk) -> Mat2 { return -u * u - kk; };
  RiccatiSolution sol;
  Mat2 u = u0;
  sol.t.push_back(0.0);
  sol.u.push_back(u);
  sol.trace.push_back(u.trace());
  for (std::size_t s = 0; s < steps; ++s) {
    const Mat2& ka = k[2 * s];
    const Mat2& kb = k[2 * s + 1];
    const Mat2& kc = k[2 * s + 2];
    const Mat2 k1 = f(u, ka);
    const Mat2 k2 = f(u + 0.5 * h * k1, kb);
    const Mat2 k3 = f(u + 0.5 * h * k2, kb);
    const Mat2 k4 = f(u + h * k3, kc);
    u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double t = (s + 1) * h;
    if (!u.allFinite() || u.cwiseAbs().maxCoeff() > 1e8) throw NonInvertibleError("Riccati solution blew up", t);
    sol.t.push_back(t);
    sol.u.push_back(u);
    sol.trace.push_back(u.trace());
  }
  return sol;
}

JacobiCurvaturePath jacobi_curvature_path(const MetricField& metric, const Vec2& y, const Vec2& w, double t_end,
                                          int intervals) {
  GeodesicOptions opt;
  opt.frame = true;
  opt.steps = intervals;
  const GeodesicSolution sol = integrate_geodesic(metric, y, w, opt, t_end);
  JacobiCurvaturePath path;
  for (std::size_t s = 0; s < sol.t.size(); ++s) {
    const LocalGeometry geo = metric.at(sol.x[s], 2);
    const PointCurvature pc = curvature_at(geo);
    Mat2 kk = jacobi_curvature(pc.riem, geo.g, sol.v[s], sol.frame[s]);
    kk = 0.5 * (kk + kk.transpose());
    path.t.push_back(sol.t[s]);
    path.k.push_back(kk);
    const Eigen::SelfAdjointEigenSolver<Mat2> es(kk, Eigen::EigenvaluesOnly);
    path.sup_abs_eigen = std::max(path.sup_abs_eigen, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return path;
}

double sandwich_violation(double h, const RiccatiSolution& sol) {
  if (sol.u.empty()) return 0.0;
  const Eigen::SelfAdjointEigenSolver<Mat2> es0(0.5 * (sol.u[0] + sol.u[0].transpose()), Eigen::EigenvaluesOnly);
  const double lo0 = es0.eigenvalues()(0), hi0 = es0.eigenvalues()(1);
  const double t_max = riccati_blowup(h, lo0);
  double worst = 0.0;
  for (std::size_t s = 0; s < sol.u.size(); ++s) {
    if (sol.t[s] >= t_max) break;
    const Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (sol.u[s] + sol.u[s].transpose()), Eigen::EigenvaluesOnly);
    const double lower = riccati_lower(h, lo0, sol.t[s]);
    const double upper = riccati_upper(h, hi0, sol.t[s]);
    worst = std::max({worst, lower - es.eigenvalues()(0), es.eigenvalues()(1) - upper});
  }
  return worst;
}

}  // namespace curvlab
