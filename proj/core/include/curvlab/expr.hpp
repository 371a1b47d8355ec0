#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "curvlab/grid.hpp"
#include "curvlab/types.hpp"

namespace curvlab {

enum class Regularity { kSmooth, kC11, kC1 };

const char* to_string(Regularity r);
Regularity regularity_from_string(const std::string& name);

struct ExprNode;
struct ExprProgram;

/// Scalar expression in x and y. Immutable; copies share the tree.
///
/// Derivatives are symbolic. At the kinks of abs, min and max the derivative
/// takes the branch selected by a non-strict comparison: sign(0) = +1,
/// d max(a, b) = a' when a >= b, d min(a, b) = a' when a <= b.
class FieldExpr {
 public:
  FieldExpr();  // constant 0

  static FieldExpr constant(double c);
  static FieldExpr x();
  static FieldExpr y();

  double operator()(double x, double y) const;
  double operator()(const Vec2& p) const { return (*this)(p.x(), p.y()); }

  /// Partial derivative along axis 0 (x) or 1 (y).
  FieldExpr derivative(int axis) const;
  FieldExpr dx() const { return derivative(0); }
  FieldExpr dy() const { return derivative(1); }

  std::string str() const;

  /// True when the tree contains a function that is not smooth everywhere
  /// (abs, min, max, persq).
  bool has_kinks() const;
  bool is_zero() const;
  bool is_constant() const;
  Regularity inferred_regularity() const {
    return has_kinks() ? Regularity::kC11 : Regularity::kSmooth;
  }

  /// Largest mismatch of values and first derivatives across the seams
  /// x = 0 / x = 1 and y = 0 / y = 1.
  double seam_defect(int samples = 64) const;
  /// Throws kPeriodicity if seam_defect exceeds tol.
  void check_periodic(double tol = 1e-9) const;

  /// Node samples; throws kDomain where the value is not finite.
  PeriodicGridField sample(int n) const;

  friend FieldExpr operator+(const FieldExpr& a, const FieldExpr& b);
  friend FieldExpr operator-(const FieldExpr& a, const FieldExpr& b);
  friend FieldExpr operator*(const FieldExpr& a, const FieldExpr& b);
  friend FieldExpr operator/(const FieldExpr& a, const FieldExpr& b);
  friend FieldExpr operator-(const FieldExpr& a);

  const std::shared_ptr<const ExprNode>& node() const { return node_; }
  explicit FieldExpr(std::shared_ptr<const ExprNode> node);

 private:
  std::shared_ptr<const ExprNode> node_;
  std::shared_ptr<const ExprProgram> program_;
};

/// Parses the expression grammar; throws ParseError with a byte position.
FieldExpr parse_field(std::string_view source);

}  // namespace curvlab
