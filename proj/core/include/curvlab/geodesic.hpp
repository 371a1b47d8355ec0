#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "curvlab/metric_field.hpp"
#include "curvlab/potential.hpp"
#include "curvlab/types.hpp"

namespace curvlab {

/// Geodesic t -> gamma(t) with gamma(0) = y, gamma'(0) = w, on a uniform
/// time grid, together with the variational propagator
///   phi(t) = d(x(t), v(t)) / d(y, w)
/// and optionally a parallel frame.
struct GeodesicSolution {
  Vec2 y, w;
  std::vector<double> t;
  std::vector<Vec2> x;  // unwrapped positions
  std::vector<Vec2> v;
  std::vector<Mat4> phi;
  std::vector<Mat2> frame;  // columns are the parallel frame; empty unless requested

  /// Position part d x(t) / d y, equal to I at t = 0.
  Mat2 jacobian(std::size_t k) const { return phi[k].topLeftCorner<2, 2>(); }
  Mat2 dx_dw(std::size_t k) const { return phi[k].topRightCorner<2, 2>(); }
  /// Largest relative deviation of g(v, v) from its initial value.
  double energy_drift(const MetricField& metric) const;
};

struct GeodesicOptions {
  int steps = 256;  // RK4 steps per unit time
  bool frame = false;
  /// Initial frame; default is a g(y)-orthonormal frame.
  std::optional<Mat2> frame0;
};

/// RK4 integration on [0, t_end] (t_end may be negative).
GeodesicSolution integrate_geodesic(const MetricField& metric, const Vec2& y, const Vec2& w,
                                    const GeodesicOptions& options = {}, double t_end = 1.0);

/// End point gamma(1), unwrapped.
Vec2 exp_map(const MetricField& metric, const Vec2& y, const Vec2& v, int steps = 256);

struct LogMapOptions {
  int steps = 256;
  int max_iterations = 50;
  double tolerance = 1e-9;
};

/// Initial velocity of the geodesic from y to x, nearest periodic image.
Vec2 log_map(const MetricField& metric, const Vec2& y, const Vec2& x, const LogMapOptions& options = {});
/// Same, but to a fixed lift of x (no periodic reduction); used for one
/// winding class. `guess` defaults to the coordinate displacement.
Vec2 log_map_lift(const MetricField& metric, const Vec2& y, const Vec2& x_lift, const LogMapOptions& options = {},
                  std::optional<Vec2> guess = {});

struct DistanceResult {
  double value = 0.0;
  /// True when shooting failed in every class and the graph estimate is used.
  bool fallback = false;
};

DistanceResult distance_detail(const MetricField& metric, const Vec2& x, const Vec2& y,
                               const LogMapOptions& options = {});
double distance(const MetricField& metric, const Vec2& x, const Vec2& y, const LogMapOptions& options = {});

/// Pairwise distances, rows = a, columns = b.
Eigen::MatrixXd distance_matrix(const MetricField& metric, const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                                const LogMapOptions& options = {});

/// Shortest-path estimate on a 16-neighbour periodic graph of resolution n.
double graph_distance(const MetricField& metric, const Vec2& x, const Vec2& y, int n = 128);

/// Riemannian gradient of x -> d(x, y)^2 / 2 at x: the final velocity of
/// the geodesic from y to x.
Vec2 grad_half_dist_sq(const MetricField& metric, const Vec2& y, const Vec2& x, const LogMapOptions& options = {});

/// Flow F_t(y) = exp_y(-t grad phi(y)) and its Jacobian at one base point.
struct FlowJacobian {
  Vec2 y;
  Vec2 velocity0;  // -grad phi(y)
  std::vector<double> t;
  std::vector<Vec2> position;  // F_t(y), unwrapped
  std::vector<Vec2> velocity;
  std::vector<Mat2> jacobian;  // coordinate DF_t
  std::vector<Mat2> jacobian_dot;  // d/dt DF_t
  std::vector<Mat2> frame;  // parallel g-orthonormal frame
  /// log of the Riemannian Jacobian det DF_t * sqrt(det g(F_t y) / det g(y)).
  std::vector<double> log_det;
  /// U = J' J^-1 expressed in the parallel frame (J' the covariant derivative).
  std::vector<Mat2> u_frame;
};

/// `t_grid` may contain negative times. Throws NonInvertibleError when
/// det DF_t <= 0 at some requested time.
FlowJacobian flow_jacobian(const MetricField& metric, const Potential& phi, const Vec2& y,
                           const std::vector<double>& t_grid, int steps = 256);

}  // namespace curvlab
