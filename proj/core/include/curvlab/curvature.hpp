#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "curvlab/expr.hpp"
#include "curvlab/grid.hpp"
#include "curvlab/metric.hpp"
#include "curvlab/types.hpp"

namespace curvlab {

/// gamma[k](i, j) = Gamma^k_ij.
using Christoffel = std::array<Mat2, 2>;

/// R^m_ijk, with R(X, Y)Z^m = R^m_ijk Z^i X^j Y^k and Ric_ij = R^m_imj.
struct Riemann {
  std::array<double, 16> r{};
  double operator()(int m, int i, int j, int k) const { return r[((m * 2 + i) * 2 + j) * 2 + k]; }
  double& operator()(int m, int i, int j, int k) { return r[((m * 2 + i) * 2 + j) * 2 + k]; }
};

struct PointCurvature {
  Christoffel gamma;
  /// dgamma[a] = d_a Gamma.
  std::array<Christoffel, 2> dgamma;
  Riemann riem;
  Mat2 ric;
  /// Gauss curvature, tr(g^-1 Ric) / 2.
  double gauss = 0.0;
};

Christoffel christoffel_at(const LocalGeometry& geo);
/// Gamma and its first derivatives (needs geo.d2g).
std::array<Christoffel, 3> christoffel_with_derivatives(const LocalGeometry& geo);
PointCurvature curvature_at(const LocalGeometry& geo);

/// Matrix K_ij = g(R(e_i, v) v, e_j) for the frame given by the columns of e.
Mat2 jacobi_curvature(const Riemann& riem, const Mat2& g, const Vec2& v, const Mat2& e);

/// Curvature quantities on the nodes of a grid.
struct CurvatureFields {
  int n = 0;
  /// Which metric and which derivative path produced the fields.
  std::string source;
  PeriodicGridField g;
  std::vector<Christoffel> gamma;
  std::vector<Riemann> riem;  // empty when only Gamma was requested
  PeriodicGridField ric;
  PeriodicGridField gauss;

  bool has_riemann() const { return !riem.empty(); }
  double christoffel_symmetry_defect() const;
  double max_abs_christoffel() const;
  double max_abs_riemann() const;
  double ricci_symmetry_defect() const;
  /// sup |Ric - K g| / sup |Ric| (0 for vanishing Ric).
  double proportionality_residual() const;
};

CurvatureFields christoffel(const SmoothedMetric& metric);
/// Direct path from the sampled (a.e.) derivatives of the model.
CurvatureFields christoffel(const MetricModel& model);
CurvatureFields riemann_ricci(const SmoothedMetric& metric);
/// Direct a.e. path; needs a sampled smooth or C11 model.
CurvatureFields riemann_ricci(const MetricModel& model);

using VectorExpr = std::array<FieldExpr, 2>;

struct PairingReport {
  std::vector<double> eps;
  std::vector<double> values;
  /// Richardson limit of the last two entries (second order in eps).
  double extrapolated = 0.0;
  std::optional<double> direct;
  double spread = 0.0;
  bool converged = false;
};

/// Integral of Ric_{g_eps}(X, X) * omega dx dy over an eps sweep.
PairingReport distributional_pairing(const MetricModel& model, const VectorExpr& x, const FieldExpr& omega,
                                     const std::vector<double>& eps_list, double tolerance = 1e-3);

struct BoundEntry {
  double eps = 0.0;
  double k_eff = 0.0;
  int i = 0, j = 0;
  Vec2 vector = Vec2::Zero();
};

struct BoundVerdict {
  double delta = 0.0;
  bool holds = false;
  /// Largest sampled eps from which every smaller sampled eps satisfies the bound.
  std::optional<double> eps0;
  /// Worst failing entry among the last M.
  std::optional<BoundEntry> witness;
};

struct BoundReport {
  double k = 0.0;
  int tail = 3;
  std::vector<BoundEntry> entries;
  std::vector<BoundVerdict> verdicts;
};

/// Per-node minimum of the generalized eigenvalue of (Ric, g).
BoundEntry effective_bound(const CurvatureFields& fields, double eps);

/// Sweep over eps (decreasing); the bound holds for delta when the last
/// `tail` entries all satisfy K_eff >= K - delta.
BoundReport bound_check(const MetricModel& model, double k, const std::vector<double>& deltas,
                        const std::vector<double>& eps_list, int tail = 3);
/// Same, reusing already computed curvature fields (one per eps).
BoundReport bound_check(const std::vector<CurvatureFields>& fields, const std::vector<double>& eps_list, double k,
                        const std::vector<double>& deltas, int tail = 3);

nlohmann::json to_json(const BoundReport& report);

}  // namespace curvlab
