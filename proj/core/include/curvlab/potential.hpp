#pragma once

#include <memory>
#include <string>

#include "curvlab/expr.hpp"
#include "curvlab/metric_field.hpp"
#include "curvlab/types.hpp"

namespace curvlab {

/// Scalar potential on the torus with coordinate derivatives.
class Potential {
 public:
  virtual ~Potential() = default;
  virtual double value(const Vec2& p) const = 0;
  /// Coordinate differential (d_x phi, d_y phi).
  virtual Vec2 differential(const Vec2& p) const = 0;
  /// Coordinate second derivatives.
  virtual Mat2 hessian(const Vec2& p) const = 0;
  virtual std::string describe() const = 0;
};

using PotentialPtr = std::shared_ptr<const Potential>;

class ExprPotential final : public Potential {
 public:
  explicit ExprPotential(const FieldExpr& phi);
  double value(const Vec2& p) const override;
  Vec2 differential(const Vec2& p) const override;
  Mat2 hessian(const Vec2& p) const override;
  std::string describe() const override;

 private:
  FieldExpr f_, fx_, fy_, fxx_, fxy_, fyy_;
};

/// zeta(|d|) * (b.d + d^T A d / 2) with d the periodic displacement from the
/// center. The cutoff zeta is 1 for |d| <= r_plateau, 0 beyond 1.5 r_plateau
/// and smooth in between. r_plateau = 0 disables the cutoff (then the
/// potential is only meaningful near the center).
class LocalQuadraticPotential final : public Potential {
 public:
  LocalQuadraticPotential(const Vec2& center, const Vec2& b, const Mat2& a, double r_plateau);
  double value(const Vec2& p) const override;
  Vec2 differential(const Vec2& p) const override;
  Mat2 hessian(const Vec2& p) const override;
  std::string describe() const override;

  const Vec2& center() const { return center_; }
  const Vec2& linear() const { return b_; }
  const Mat2& quadratic() const { return a_; }
  double plateau_radius() const { return r0_; }

 private:
  Vec2 center_, b_;
  Mat2 a_;
  double r0_;
};

/// Smooth step: 1 on (-inf, 0], 0 on [1, inf), with first two derivatives.
struct StepValue {
  double value, d1, d2;
};
StepValue smooth_step(double s);

/// Riemannian gradient g^-1 d phi.
Vec2 riemannian_gradient(const MetricField& metric, const Potential& phi, const Vec2& p);
/// Hess^g phi_ij = d_ij phi - Gamma^k_ij d_k phi.
Mat2 riemannian_hessian(const MetricField& metric, const Potential& phi, const Vec2& p);

}  // namespace curvlab
