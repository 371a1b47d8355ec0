#include "curvlab/potential.hpp"

#include <cmath>
#include <sstream>

#include "curvlab/curvature.hpp"
#include "curvlab/error.hpp"
#include "curvlab/io.hpp"

namespace curvlab {

ExprPotential::ExprPotential(const FieldExpr& phi)
    : f_(phi), fx_(phi.dx()), fy_(phi.dy()), fxx_(fx_.dx()), fxy_(fx_.dy()), fyy_(fy_.dy()) {
  phi.check_periodic();
}

double ExprPotential::value(const Vec2& p) const { return f_(wrap_unit(p)); }

Vec2 ExprPotential::differential(const Vec2& p) const {
  const Vec2 q = wrap_unit(p);
  return {fx_(q), fy_(q)};
}

Mat2 ExprPotential::hessian(const Vec2& p) const {
  const Vec2 q = wrap_unit(p);
  const double xy = fxy_(q);
  Mat2 h;
  h << fxx_(q), xy, xy, fyy_(q);
  return h;
}

std::string ExprPotential::describe() const { return f_.str(); }

StepValue smooth_step(double s) {
  if (s <= 0.0) return {1.0, 0.0, 0.0};
  if (s >= 1.0) return {0.0, 0.0, 0.0};
  auto f = [](double z) { return std::exp(-1.0 / z); };
  auto f1 = [&](double z) { return f(z) / (z * z); };
  auto f2 = [&](double z) { return f(z) * (1.0 / (z * z * z * z) - 2.0 / (z * z * z)); };
  const double a = f(1.0 - s), b = f(s);
  const double a1 = -f1(1.0 - s), b1 = f1(s);
  const double a2 = f2(1.0 - s), b2 = f2(s);
  const double d = a + b, d1 = a1 + b1, d2 = a2 + b2;
  const double v = a / d;
  const double v1 = (a1 * d - a * d1) / (d * d);
  const double v2 = (a2 * d - a * d2) / (d * d) - 2.0 * d1 * (a1 * d - a * d1) / (d * d * d);
  return {v, v1, v2};
}

LocalQuadraticPotential::LocalQuadraticPotential(const Vec2& center, const Vec2& b, const Mat2& a, double r_plateau)
    : center_(wrap_unit(center)), b_(b), a_(0.5 * (a + a.transpose())), r0_(r_plateau) {
  if (r0_ < 0.0 || 1.5 * r0_ >= 0.5)
    throw Error(ErrorCode::kInvalidArgument, "plateau radius must lie in [0, 1/3)");
}

namespace {

struct Cutoff {
  double z = 1.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
};

Cutoff cutoff(const Vec2& d, double r0) {
  Cutoff c;
  if (r0 <= 0.0) return c;
  const double r = d.norm();
  const double width = 0.5 * r0;
  if (r <= r0) return c;
  if (r >= r0 + width) {
    c.z = 0.0;
    return c;
  }
  const StepValue s = smooth_step((r - r0) / width);
  const Vec2 e = d / r;
  c.z = s.value;
  c.grad = s.d1 / width * e;
  c.hess = s.d2 / (width * width) * e * e.transpose() + s.d1 / width * (Mat2::Identity() - e * e.transpose()) / r;
  return c;
}

}  // namespace

double LocalQuadraticPotential::value(const Vec2& p) const {
  const Vec2 d = periodic_displacement(Vec2(p - center_));
  return cutoff(d, r0_).z * (b_.dot(d) + 0.5 * d.dot(a_ * d));
}

Vec2 LocalQuadraticPotential::differential(const Vec2& p) const {
  const Vec2 d = periodic_displacement(Vec2(p - center_));
  const Cutoff c = cutoff(d, r0_);
  const double q = b_.dot(d) + 0.5 * d.dot(a_ * d);
  return c.z * (b_ + a_ * d) + q * c.grad;
}

Mat2 LocalQuadraticPotential::hessian(const Vec2& p) const {
  const Vec2 d = periodic_displacement(Vec2(p - center_));
  const Cutoff c = cutoff(d, r0_);
  const double q = b_.dot(d) + 0.5 * d.dot(a_ * d);
  const Vec2 dq = b_ + a_ * d;
  return c.z * a_ + c.grad * dq.transpose() + dq * c.grad.transpose() + q * c.hess;
}

std::string LocalQuadraticPotential::describe() const {
  std::ostringstream out;
  out << "local quadratic at (" << format_double(center_.x()) << ", " << format_double(center_.y()) << "), b = ("
      << format_double(b_.x()) << ", " << format_double(b_.y()) << "), A = [" << format_double(a_(0, 0)) << ", "
      << format_double(a_(0, 1)) << "; " << format_double(a_(1, 0)) << ", " << format_double(a_(1, 1))
      << "], plateau " << format_double(r0_);
  return out.str();
}

Vec2 riemannian_gradient(const MetricField& metric, const Potential& phi, const Vec2& p) {
  return metric.at(p, 0).g.ldlt().solve(phi.differential(p));
}

Mat2 riemannian_hessian(const MetricField& metric, const Potential& phi, const Vec2& p) {
  const Christoffel gamma = christoffel_at(metric.at(p, 1));
  const Vec2 d = phi.differential(p);
  return phi.hessian(p) - d(0) * gamma[0] - d(1) * gamma[1];
}

}  // namespace curvlab
