#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "curvlab/geodesic.hpp"
#include "curvlab/metric_field.hpp"
#include "curvlab/potential.hpp"
#include "curvlab/types.hpp"

namespace curvlab {

/// Finitely supported probability measure. When `density` is non-empty it
/// holds the density against `reference` at each support point.
struct DiscreteMeasure {
  std::vector<Vec2> points;
  std::vector<double> weights;
  std::vector<double> density;
  std::string reference;

  std::size_t size() const { return points.size(); }
  /// Throws kInvalidArgument unless weights are >= 0 and sum to 1 within 1e-12.
  void validate() const;

  static DiscreteMeasure dirac(const Vec2& p);
  static DiscreteMeasure uniform(const std::vector<Vec2>& points);
};

/// Smooth bump eta0 = Z chi(|x - center| / radius), chi(s) = exp(-1/(1-s^2)),
/// normalized against the node volumes of an n x n grid.
struct BumpDensity {
  Vec2 center;
  double radius = 0.05;
  double scale = 1.0;

  double operator()(const Vec2& p) const;
};

struct BumpMeasure {
  BumpDensity density;
  /// Grid nodes inside the bump, weights eta0 * dvol_g.
  DiscreteMeasure measure;
  int n = 0;
  /// Node volume sqrt(det g) / n^2 at each support point.
  std::vector<double> node_volume;
};

BumpMeasure bump_measure(const MetricField& metric, const Vec2& center, double radius, int n);

struct PlanEntry {
  int i, j;
  double weight;
};

struct TransportPlan {
  int rows = 0, cols = 0;
  std::vector<PlanEntry> entries;
  double cost = 0.0;

  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
  Eigen::MatrixXd dense() const;
  /// Largest marginal deviation from (a, b).
  double marginal_error(const std::vector<double>& a, const std::vector<double>& b) const;
};

/// psi on the source support and its c-transform on the target support.
struct KantorovichPotentials {
  std::vector<double> psi;
  std::vector<double> psi_c;
  /// sum a psi + sum b psi_c
  double value = 0.0;
};

struct ExactSolution {
  TransportPlan plan;
  KantorovichPotentials duals;
  double gap = 0.0;
};

struct SinkhornSolution {
  TransportPlan plan;
  std::vector<double> f, g;
  double marginal_error = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// c(x, y) = d(x, y)^2 / 2.
Eigen::MatrixXd cost_matrix(const MetricField& metric, const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                            const LogMapOptions& options = {});

/// Disk cache for cost matrices keyed by a metric key and the support hash.
struct CostCache {
  std::filesystem::path directory;
  std::string metric_key;
};

Eigen::MatrixXd cost_matrix(const MetricField& metric, const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                            const CostCache& cache, const LogMapOptions& options = {});

/// psi^c(y_j) = min_i c_ij - psi_i.
std::vector<double> c_transform(const std::vector<double>& psi, const Eigen::MatrixXd& cost);
/// phi^c(x_i) = min_j c_ij - phi_j.
std::vector<double> c_transform_target(const std::vector<double>& phi, const Eigen::MatrixXd& cost);

struct ConcavityResult {
  bool concave = false;
  double residual = 0.0;
};

/// |psi^cc - psi|_inf for a square cost on a single support.
ConcavityResult is_c_concave(const std::vector<double>& psi, const Eigen::MatrixXd& cost, double tolerance = 1e-9);

struct GlaudoReport {
  bool passes = false;
  bool gradient_ok = false;
  bool hessian_ok = false;
  double gradient_sup = 0.0;
  double gradient_bound = 0.0;
  /// Largest generalized eigenvalue of Hess phi against g.
  double hessian_max = 0.0;
};

/// Sufficient condition for c-concavity on an n x n node grid:
///   |grad phi| <= min(eps / (3 K diam), C*),  Hess phi <= (1 - eps) g.
/// For K <= 0 only |grad phi| <= C* is required.
GlaudoReport glaudo_check(const MetricField& metric, const Potential& phi, double eps, std::optional<double> c_star,
                          double sectional_upper, double diameter, int n = 64);

/// Successive shortest paths on the dense bipartite network.
ExactSolution solve_exact(const std::vector<double>& a, const std::vector<double>& b, const Eigen::MatrixXd& cost,
                          std::size_t cap = 4096);
ExactSolution solve_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Eigen::MatrixXd& cost,
                          std::size_t cap = 4096);

/// Log-domain Sinkhorn for the entropically regularized problem.
SinkhornSolution solve_sinkhorn(const std::vector<double>& a, const std::vector<double>& b,
                                const Eigen::MatrixXd& cost, double reg, int max_iterations = 100000,
                                double tolerance = 1e-10);

struct WassersteinResult {
  double value = 0.0;
  /// "exact", or "sinkhorn" when the supports exceed the cap.
  std::string source;
};

WassersteinResult wasserstein2_detail(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const MetricField& metric,
                                      std::size_t cap = 4096);
double wasserstein2(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const MetricField& metric);

/// T(x) = exp_x(-grad psi(x)) per point (unwrapped).
std::vector<Vec2> monge_map(const MetricField& metric, const Potential& psi, const std::vector<Vec2>& points,
                            int steps = 256);

/// mu_t = (F_t)_# mu0 with F_t(y) = exp_y(-t grad phi(y)), in Lagrangian
/// form: support point i moves to position[k][i] and carries density
/// density[k][i] = eta0(y_i) / J_t(y_i) against vol_g.
struct DisplacementFamily {
  std::vector<double> t;
  std::vector<Vec2> base;
  std::vector<double> weights;
  std::vector<double> eta0;
  std::vector<double> node_volume;
  std::vector<std::vector<Vec2>> position;
  std::vector<std::vector<double>> log_det;
  std::vector<std::vector<double>> density;
  /// |grad phi(y_i)|_g^2
  std::vector<double> speed_sq;

  DiscreteMeasure measure(std::size_t k) const;
  /// Sum of density * J * node volume, which must stay 1.
  double mass(std::size_t k) const;
  /// int |grad phi|^2 d mu0 = W2(mu0, mu1)^2 when phi is c-concave.
  double lagrangian_w2_sq() const;
};

DisplacementFamily displacement_interpolation(const MetricField& metric, const Potential& phi, const BumpMeasure& mu0,
                                              const std::vector<double>& t_list, int steps = 256);

}  // namespace curvlab
