#pragma once

#include <optional>
#include <string>
#include <vector>

#include "curvlab/curvature.hpp"
#include "curvlab/expr.hpp"
#include "curvlab/metric.hpp"

namespace curvlab {

/// Sup-norms over the grid nodes of a commutator along an eps sweep.
struct CommutatorReport {
  std::string quantity;
  /// The commutator evaluated, in words and formulas.
  std::string expression;
  std::vector<double> eps;
  std::vector<double> c0;
  std::vector<std::optional<double>> c1;
  std::vector<std::optional<double>> c2;

  /// Every reported sequence ends at or below ratio times its first entry
  /// and has at most `inversions` increases.
  bool converges(double ratio = 0.25, int inversions = 1) const;
  /// Weak monotonicity of every sequence, allowing the given inversions.
  bool decreasing(int inversions = 1) const;
};

bool sequence_converges(const std::vector<double>& values, double ratio = 0.25, int inversions = 1);

/// CSV with columns eps,norm_C0,norm_C1,norm_C2 (blank where not computed).
std::string to_csv(const CommutatorReport& report);

/// (a*rho)(f*rho) - (af)*rho and its first derivatives; the derivatives are
/// taken on the kernel, so f only needs to be continuous.
CommutatorReport friedrichs_norms(const FieldExpr& a, const FieldExpr& f, const std::vector<double>& eps_list,
                                  int n);

/// Ric(g_eps) - Ric(g)*rho_eps, componentwise.
CommutatorReport ricci_commutator_norms(const MetricModel& model, const std::vector<double>& eps_list);

struct PairingCommutators {
  /// Ric_g(X,Y)*rho_eps - Ric_{g_eps}(X,Y), C0 only.
  CommutatorReport ricci;
  /// g(X,Y)*rho_eps - g_eps(X,Y) with first and second derivatives.
  CommutatorReport metric;
};

PairingCommutators pairing_commutator_norms(const MetricModel& model, const VectorExpr& x, const VectorExpr& y,
                                            const std::vector<double>& eps_list);

/// sup |g_eps^-1 - g^-1| along the sweep (reported, no expected rate).
CommutatorReport inverse_deviation(const MetricModel& model, const std::vector<double>& eps_list);

}  // namespace curvlab
