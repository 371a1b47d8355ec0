#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "curvlab/curvature.hpp"
#include "curvlab/metric_field.hpp"
#include "curvlab/potential.hpp"
#include "curvlab/transport.hpp"
#include "curvlab/types.hpp"

namespace curvlab {

/// Convex U on [0, inf) with U(0) = 0.
class EntropyFunction {
 public:
  using Fn = std::function<double(double)>;

  /// U(r) = r log r.
  static EntropyFunction boltzmann();
  /// U(r) = (r^m - r) / (m - 1), m > 1.
  static EntropyFunction power(double m);
  /// User handle; the right derivative is taken by a one-sided difference
  /// when not supplied.
  static EntropyFunction custom(std::string name, Fn u, Fn du_right = {});
  /// "boltzmann" or "power:<m>".
  static EntropyFunction from_string(const std::string& spec);

  const std::string& name() const { return name_; }
  bool is_boltzmann() const { return boltzmann_; }
  double operator()(double r) const;
  double derivative(double r) const;
  /// lim U(r)/r; +inf when unbounded.
  double slope_at_infinity() const;
  /// Second differences on a log grid of [1e-6, 1e6] are >= -tol.
  bool convex_on_grid(double tol = 1e-10) const;
  /// lambda -> e^lambda U(e^-lambda) convex on [-14, 14].
  bool in_dc_infinity(double tol = 1e-10) const;

 private:
  std::string name_;
  Fn u_, du_;
  bool boltzmann_ = false;
};

/// int U(rho) d nu with rho = d mu / d nu on a common support.
double entropy_value(const EntropyFunction& u, const DiscreteMeasure& mu, const DiscreteMeasure& nu);

struct LambdaK {
  double value = 0.0;
  /// The infimum is -inf.
  bool divergent = false;
};

/// inf_{r > 0} K p(r) / r with p(r) = r U'(r) - U(r).
LambdaK lambda_k_detail(const EntropyFunction& u, double k);
double lambda_k(const EntropyFunction& u, double k);

struct ConvexityOptions {
  std::vector<double> t{0.0, 0.25, 0.5, 0.75, 1.0};
  int steps = 256;
  double tolerance = 1e-3;
  /// Support points used for the transport cross-check of W2 (0 disables it).
  int solver_particles = 64;
  /// Measure-side evaluation through Eulerian densities, on a grid
  /// `eulerian_refine` times finer than the one carrying mu0.
  bool eulerian = true;
  int eulerian_refine = 2;
};

/// Both sides of
///   U(mu_t) <= t U(mu_1) + (1 - t) U(mu_0) - lambda t (1 - t) W2^2 / 2
/// along mu_t = (F_t)_# mu_0. lhs/rhs/margin use the change of variables on
/// the support of mu_0; eulerian_* use densities recovered on the grid.
struct ConvexityReport {
  double lambda = 0.0;
  double tolerance = 0.0;
  std::vector<double> t, lhs, rhs, margin;
  std::vector<double> eulerian_lhs, eulerian_margin;
  /// max |margin - eulerian_margin|
  double form_gap = 0.0;
  bool forms_agree = true;
  /// max_t |int rho_t dvol - int rho_0 dvol| of the Eulerian densities.
  double mass_error = 0.0;
  double w2 = 0.0;
  std::string w2_source = "constructed";
  std::optional<double> w2_solver;
  /// |W2^2 (constructed) - W2^2 (solver)| on the cross-check support.
  std::optional<double> w2_sq_gap;
  bool verdict = false;
};

nlohmann::json to_json(const ConvexityReport& report);

ConvexityReport convexity_check(const MetricField& metric, const Potential& phi, const BumpMeasure& mu0, double k,
                                const EntropyFunction& u, const ConvexityOptions& options = {});

/// Margins of the change-of-variables form for arbitrary non-negative
/// weights (scaling the weights scales the margins).
std::vector<double> lagrangian_margins(const EntropyFunction& u, const DisplacementFamily& family,
                                       const std::vector<double>& weights, double lambda, double total_volume);

/// Riemannian area by the rectangle rule on an n x n grid.
double total_volume(const MetricField& metric, int n);

/// phi(x) = g_il v^i (x*^l - x^l) - 1/2 Gamma^l_ij g_rl v^r (x - x*)^i (x - x*)^j
/// near x*, cut off outside a plateau; grad phi(x*) = -v and Hess phi(x*) = 0.
/// `hessian` adds a prescribed Riemannian Hessian at x*.
LocalQuadraticPotential build_witness_potential(const MetricField& metric, const Vec2& x_star, const Vec2& v,
                                                double r_plateau = 0.2, const Mat2& hessian = Mat2::Zero());

struct CIdentityReport {
  Vec2 x_star, v;
  /// -C''(0) from a five-point stencil of log det DF_t.
  double lhs = 0.0;
  /// Ric(v, v).
  double rhs = 0.0;
  double abs_error = 0.0;
  double relative_error = 0.0;
  double step = 0.0;
};

CIdentityReport c_second_derivative_identity(const MetricField& metric, const Vec2& x_star, const Vec2& v,
                                             int steps = 512, double step = 0.25);

struct PointwiseConvexityReport {
  std::vector<double> t;
  /// f(t) = -C(t) - (K - delta/2) t^2 g(v, v) / 2
  std::vector<double> value;
  /// Divided second differences at interior grid points.
  std::vector<double> second_difference;
  /// -C''(0) - (K - delta/2) g(v, v)
  double margin_at_zero = 0.0;
  double scale = 1.0;
  bool verdict = false;
};

PointwiseConvexityReport pointwise_convexity_check(const MetricField& metric, const Vec2& x_star, const Vec2& v,
                                                   double k, double delta, const std::vector<double>& t_grid,
                                                   int steps = 512);

/// Concentration sweep: normalized change-of-variables margins for bumps of
/// decreasing radius around x*, extrapolated to the pointwise margin.
struct WitnessExperiment {
  Vec2 x_star, v;
  double lambda = 0.0;
  std::vector<double> t;
  std::vector<double> radii;
  std::vector<std::vector<double>> margins;  // [radius][t]
  std::vector<double> extrapolated;
  /// -tC(1) - (1-t)C(0) - lambda t(1-t) g(v,v)/2 + C(t) at x*.
  std::vector<double> pointwise;
  double max_gap = 0.0;
};

WitnessExperiment witness_experiment(const MetricField& metric, const Potential& phi, const Vec2& x_star, double k,
                                     const std::vector<double>& radii, const std::vector<double>& t_list, int n,
                                     int steps = 256);

}  // namespace curvlab
