#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "curvlab/expr.hpp"
#include "curvlab/grid.hpp"
#include "curvlab/types.hpp"

namespace curvlab {

/// Riemannian metric on the torus given by expressions (conformal factor or
/// components) or by raw samples, plus optional node samples.
class MetricModel {
 public:
  static MetricModel flat();
  /// g = exp(2u) * identity.
  static MetricModel conformal(const FieldExpr& u, std::optional<Regularity> tag = {});
  static MetricModel components(const FieldExpr& g11, const FieldExpr& g12, const FieldExpr& g22,
                                std::optional<Regularity> tag = {});
  /// Samples only; derivatives come from differences or differentiated kernels.
  static MetricModel from_samples(const PeriodicGridField& g, Regularity tag = Regularity::kC1);
  /// {"kind": "conformal"|"components", "u" | "g11","g12","g22", "regularity"?}
  static MetricModel from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;

  Regularity regularity() const { return tag_; }
  bool has_expressions() const { return static_cast<bool>(exprs_); }
  bool is_conformal() const;
  /// Conformal factor u; only valid when is_conformal().
  const FieldExpr& conformal_factor() const;
  /// True when every first derivative is identically zero (constant metric).
  bool is_flat() const;
  std::string description() const;

  /// Symbolic value and derivatives up to the given order (0, 1 or 2). Second
  /// derivatives of C11 models are the almost-everywhere ones.
  LocalGeometry geometry_at(const Vec2& p, int order = 2) const;

  /// Copy with node samples of g, its first derivatives and, when
  /// expressions exist, its a.e. second derivatives. Verifies symmetry,
  /// positive definiteness and the determinant floor.
  MetricModel sampled(int n, double det_floor = 1e-6) const;

  bool is_sampled() const { return n_ > 0; }
  int resolution() const { return n_; }
  const PeriodicGridField& g() const { return g_; }
  const std::array<PeriodicGridField, 2>& dg() const { return dg_; }
  bool has_second_derivatives() const { return has_d2g_; }
  const std::array<PeriodicGridField, 3>& d2g() const { return d2g_; }
  LocalGeometry geometry_at_node(int i, int j) const;
  double min_det() const;

 private:
  struct Expressions;

  MetricModel() = default;
  void require_sampled() const;

  std::shared_ptr<const Expressions> exprs_;
  Regularity tag_ = Regularity::kSmooth;

  int n_ = 0;
  PeriodicGridField g_;
  std::array<PeriodicGridField, 2> dg_;
  std::array<PeriodicGridField, 3> d2g_;
  bool has_d2g_ = false;
};

/// Mollified metric g * rho_eps on the grid with its derivatives.
struct SmoothedMetric {
  double eps = 0.0;
  int n = 0;
  PeriodicGridField g;
  PeriodicGridField ginv;
  std::array<PeriodicGridField, 2> dg;
  std::array<PeriodicGridField, 3> d2g;
  /// "symbolic" when second derivatives were mollified from a.e. symbolic
  /// second derivatives, "kernel" when taken from differentiated kernels.
  std::string second_derivative_source;

  LocalGeometry at_node(int i, int j) const;
  /// Largest |ginv * g - I| entry over nodes.
  double inverse_defect() const;
};

/// Mollifies a sampled model. Throws SpdError if the result is not positive
/// definite somewhere.
SmoothedMetric smooth(const MetricModel& model, double eps);

/// Largest relative deviation |g_eps(v,v)/g(v,v) - 1| over nodes and
/// directions (exact per node through the generalized eigenvalues).
double equivalence_delta(const PeriodicGridField& g, const PeriodicGridField& g_eps);

/// Riemannian area: rectangle rule of sqrt(det g).
double volume(const PeriodicGridField& g);

/// Scalar field sqrt(det g) on the nodes.
PeriodicGridField volume_density(const PeriodicGridField& g);

}  // namespace curvlab
