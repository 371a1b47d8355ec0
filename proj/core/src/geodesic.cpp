#include "curvlab/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "curvlab/curvature.hpp"
#include "curvlab/error.hpp"
#include "curvlab/io.hpp"
#include "curvlab/parallel.hpp"

namespace curvlab {
namespace {

struct State {
  Vec2 x, v;
  Mat4 phi;
  Mat2 e;
};

struct Options {
  bool variational = true;
  bool frame = false;
};

State rhs(const MetricField& metric, const State& s, const Options& opt) {
  State d;
  d.x = s.v;
  const LocalGeometry geo = metric.at(s.x, opt.variational ? 2 : 1);
  Christoffel gamma;
  std::array<Christoffel, 2> dgamma;
  if (opt.variational) {
    const auto all = christoffel_with_derivatives(geo);
    gamma = all[0];
    dgamma = {all[1], all[2]};
  } else {
    gamma = christoffel_at(geo);
  }
  // G(k, j) = Gamma^k_ij v^i
  Mat2 g_v;
  for (int k = 0; k < 2; ++k) g_v.row(k) = (gamma[k] * s.v).transpose();
  d.v = -g_v * s.v;
  if (opt.variational) {
    Mat4 a = Mat4::Zero();
    a.topRightCorner<2, 2>() = Mat2::Identity();
    for (int k = 0; k < 2; ++k)
      for (int m = 0; m < 2; ++m) a(2 + k, m) = -s.v.dot(dgamma[m][k] * s.v);
    a.bottomRightCorner<2, 2>() = -2.0 * g_v;
    d.phi = a * s.phi;
  } else {
    d.phi = Mat4::Zero();
  }
  d.e = opt.frame ? Mat2(-g_v * s.e) : Mat2::Zero();
  return d;
}

void axpy(State& out, const State& s, double h, const State& d) {
  out.x = s.x + h * d.x;
  out.v = s.v + h * d.v;
  out.phi = s.phi + h * d.phi;
  out.e = s.e + h * d.e;
}

void rk4_step(const MetricField& metric, State& s, double h, const Options& opt) {
  State tmp;
  const State k1 = rhs(metric, s, opt);
  axpy(tmp, s, 0.5 * h, k1);
  const State k2 = rhs(metric, tmp, opt);
  axpy(tmp, s, 0.5 * h, k2);
  const State k3 = rhs(metric, tmp, opt);
  axpy(tmp, s, h, k3);
  const State k4 = rhs(metric, tmp, opt);
  const double c = h / 6.0;
  s.x += c * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  s.v += c * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
  s.phi += c * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi);
  s.e += c * (k1.e + 2.0 * k2.e + 2.0 * k3.e + k4.e);
  if (!s.x.allFinite() || !s.v.allFinite() || !s.phi.allFinite())
    throw Error(ErrorCode::kNoConvergence, "geodesic integration produced non-finite values");
}

Mat2 orthonormal_frame(const Mat2& g) {
  const Eigen::LLT<Mat2> llt(g);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::kNotSpd, "metric not positive definite");
  return Mat2(llt.matrixL()).inverse().transpose();
}

State initial_state(const Vec2& y, const Vec2& w, const Mat2& e0) {
  State s;
  s.x = y;
  s.v = w;
  s.phi = Mat4::Identity();
  s.e = e0;
  return s;
}

int step_count(int steps_per_unit, double span) {
  return std::max(1, static_cast<int>(std::ceil(steps_per_unit * std::abs(span) - 1e-9)));
}

// Endpoint and dx/dw of the geodesic over unit time.
struct Shot {
  Vec2 end;
  Mat2 dx_dw;
};

Shot shoot(const MetricField& metric, const Vec2& y, const Vec2& w, int steps) {
  State s = initial_state(y, w, Mat2::Identity());
  const Options opt{true, false};
  const double h = 1.0 / steps;
  for (int k = 0; k < steps; ++k) rk4_step(metric, s, h, opt);
  return {s.x, s.phi.topRightCorner<2, 2>()};
}

}  // namespace

double GeodesicSolution::energy_drift(const MetricField& metric) const {
  if (x.empty()) return 0.0;
  const double e0 = v[0].dot(metric.at(x[0], 0).g * v[0]);
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double e = v[k].dot(metric.at(x[k], 0).g * v[k]);
    worst = std::max(worst, std::abs(e - e0));
  }
  return e0 > 0.0 ? worst / e0 : worst;
}

GeodesicSolution integrate_geodesic(const MetricField& metric, const Vec2& y, const Vec2& w,
                                    const GeodesicOptions& options, double t_end) {
  if (options.steps < 16) throw Error(ErrorCode::kInvalidArgument, "geodesic integration needs at least 16 steps");
  const int n = step_count(options.steps, t_end);
  const double h = t_end / n;
  const Mat2 e0 = options.frame ? options.frame0.value_or(orthonormal_frame(metric.at(y, 0).g)) : Mat2::Zero();
  State s = initial_state(y, w, e0);
  const Options opt{true, options.frame};
  GeodesicSolution sol;
  sol.y = y;
  sol.w = w;
  auto record = [&](double t) {
    sol.t.push_back(t);
    sol.x.push_back(s.x);
    sol.v.push_back(s.v);
    sol.phi.push_back(s.phi);
    if (options.frame) sol.frame.push_back(s.e);
  };
  record(0.0);
  for (int k = 0; k < n; ++k) {
    rk4_step(metric, s, h, opt);
    record((k + 1) * h);
  }
  return sol;
}

Vec2 exp_map(const MetricField& metric, const Vec2& y, const Vec2& v, int steps) {
  if (metric.is_flat()) return y + v;
  State s = initial_state(y, v, Mat2::Identity());
  const Options opt{false, false};
  const double h = 1.0 / steps;
  for (int k = 0; k < steps; ++k) rk4_step(metric, s, h, opt);
  return s.x;
}

Vec2 log_map_lift(const MetricField& metric, const Vec2& y, const Vec2& x_lift, const LogMapOptions& options,
                  std::optional<Vec2> guess) {
  if (metric.is_flat()) return x_lift - y;
  Vec2 v = guess.value_or(Vec2(x_lift - y));
  Shot shot = shoot(metric, y, v, options.steps);
  double res = (x_lift - shot.end).norm();
  double best = res;
  for (int it = 0; it < options.max_iterations; ++it) {
    if (res <= options.tolerance) return v;
    const Eigen::FullPivLU<Mat2> lu(shot.dx_dw);
    if (!lu.isInvertible()) break;
    const Vec2 step = lu.solve(Vec2(x_lift - shot.end));
    double alpha = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 12; ++halving, alpha *= 0.5) {
      const Vec2 trial = v + alpha * step;
      Shot s2 = shoot(metric, y, trial, options.steps);
      const double r2 = (x_lift - s2.end).norm();
      if (r2 < res) {
        v = trial;
        shot = s2;
        res = r2;
        improved = true;
        break;
      }
    }
    best = std::min(best, res);
    if (!improved) break;
  }
  if (res <= options.tolerance) return v;
  throw ConvergenceError("log map did not converge, best residual " + format_double(best), best);
}

Vec2 log_map(const MetricField& metric, const Vec2& y, const Vec2& x, const LogMapOptions& options) {
  return log_map_lift(metric, y, y + periodic_displacement(Vec2(x - y)), options);
}

double graph_distance(const MetricField& metric, const Vec2& x, const Vec2& y, int n) {
  const double h = 1.0 / n;
  auto node_of = [&](const Vec2& p) {
    const Vec2 q = wrap_unit(p);
    const int i = static_cast<int>(std::lround(q.x() * n)) % n;
    const int j = static_cast<int>(std::lround(q.y() * n)) % n;
    return j * n + i;
  };
  static constexpr int kOffsets[16][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1}, {1, 1},  {1, -1}, {-1, 1}, {-1, -1},
                                          {1, 2},  {2, 1},  {-1, 2}, {-2, 1}, {1, -2}, {2, -1}, {-1, -2}, {-2, -1}};
  std::vector<double> dist(static_cast<std::size_t>(n) * n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  const int src = node_of(x), dst = node_of(y);
  dist[src] = 0.0;
  queue.push({0.0, src});
  while (!queue.empty()) {
    const auto [d, k] = queue.top();
    queue.pop();
    if (d > dist[k]) continue;
    if (k == dst) return d;
    const int i = k % n, j = k / n;
    for (const auto& o : kOffsets) {
      const Vec2 step(o[0] * h, o[1] * h);
      const Vec2 mid(i * h + 0.5 * step.x(), j * h + 0.5 * step.y());
      const double w = std::sqrt(step.dot(metric.at(mid, 0).g * step));
      const int ni = ((i + o[0]) % n + n) % n, nj = ((j + o[1]) % n + n) % n;
      const int nk = nj * n + ni;
      if (d + w < dist[nk]) {
        dist[nk] = d + w;
        queue.push({d + w, nk});
      }
    }
  }
  return dist[dst];
}

DistanceResult distance_detail(const MetricField& metric, const Vec2& x, const Vec2& y, const LogMapOptions& options) {
  const Vec2 d0 = periodic_displacement(Vec2(y - x));
  std::vector<Vec2> classes;
  for (int sj = -1; sj <= 1; ++sj)
    for (int si = -1; si <= 1; ++si) classes.push_back(d0 + Vec2(si, sj));
  std::stable_sort(classes.begin(), classes.end(),
                   [](const Vec2& a, const Vec2& b) { return a.squaredNorm() < b.squaredNorm(); });
  DistanceResult out;
  if (metric.is_flat()) {
    const Mat2 g = metric.at(x, 0).g;
    double best = std::numeric_limits<double>::infinity();
    for (const Vec2& d : classes) best = std::min(best, std::sqrt(d.dot(g * d)));
    out.value = best;
    return out;
  }
  const double lo = std::sqrt(metric.eigen_lower_bound());
  double best = std::numeric_limits<double>::infinity();
  const Mat2 gx = metric.at(x, 0).g;
  for (const Vec2& d : classes) {
    if (lo * d.norm() >= best) break;
    try {
      const Vec2 v = log_map_lift(metric, x, x + d, options, d);
      best = std::min(best, std::sqrt(v.dot(gx * v)));
    } catch (const ConvergenceError&) {
    }
  }
  if (std::isfinite(best)) {
    out.value = best;
    return out;
  }
  out.value = graph_distance(metric, x, y);
  out.fallback = true;
  return out;
}

double distance(const MetricField& metric, const Vec2& x, const Vec2& y, const LogMapOptions& options) {
  return distance_detail(metric, x, y, options).value;
}

Eigen::MatrixXd distance_matrix(const MetricField& metric, const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                                const LogMapOptions& options) {
  Eigen::MatrixXd out(a.size(), b.size());
  parallel_for(static_cast<std::ptrdiff_t>(a.size()), [&](std::ptrdiff_t i) {
    for (std::size_t j = 0; j < b.size(); ++j) out(i, j) = distance(metric, a[i], b[j], options);
  });
  return out;
}

Vec2 grad_half_dist_sq(const MetricField& metric, const Vec2& y, const Vec2& x, const LogMapOptions& options) {
  const Vec2 v = log_map(metric, y, x, options);
  if (metric.is_flat()) return v;
  State s = initial_state(y, v, Mat2::Identity());
  const Options opt{false, false};
  const double h = 1.0 / options.steps;
  for (int k = 0; k < options.steps; ++k) rk4_step(metric, s, h, opt);
  return s.v;
}

FlowJacobian flow_jacobian(const MetricField& metric, const Potential& phi, const Vec2& y,
                           const std::vector<double>& t_grid, int steps) {
  if (steps < 16) throw Error(ErrorCode::kInvalidArgument, "flow integration needs at least 16 steps");
  const LocalGeometry g0 = metric.at(y, 1);
  const Mat2 ginv = g0.g.inverse();
  const Vec2 dphi = phi.differential(y);
  const Mat2 hphi = phi.hessian(y);
  const Vec2 w0 = -ginv * dphi;
  Mat2 dw;
  for (int m = 0; m < 2; ++m) dw.col(m) = ginv * g0.dg[m] * ginv * dphi - ginv * hphi.col(m);
  const double half_logdet0 = 0.5 * std::log(g0.g.determinant());
  const Mat2 e0 = orthonormal_frame(g0.g);

  FlowJacobian out;
  out.y = y;
  out.velocity0 = w0;
  const std::size_t m = t_grid.size();
  out.t = t_grid;
  out.position.resize(m);
  out.velocity.resize(m);
  out.jacobian.resize(m);
  out.jacobian_dot.resize(m);
  out.frame.resize(m);
  out.log_det.resize(m);
  out.u_frame.resize(m);

  auto emit = [&](std::size_t k, const State& s) {
    const Mat2 df = s.phi.topLeftCorner<2, 2>() + s.phi.topRightCorner<2, 2>() * dw;
    const Mat2 dv = s.phi.bottomLeftCorner<2, 2>() + s.phi.bottomRightCorner<2, 2>() * dw;
    const double det = df.determinant();
    if (!(det > 0.0)) throw NonInvertibleError("flow Jacobian is not invertible", t_grid[k]);
    const LocalGeometry geo = metric.at(s.x, 1);
    const Christoffel gamma = christoffel_at(geo);
    Mat2 g_v;
    for (int kk = 0; kk < 2; ++kk) g_v.row(kk) = (gamma[kk] * s.v).transpose();
    out.position[k] = s.x;
    out.velocity[k] = s.v;
    out.jacobian[k] = df;
    out.jacobian_dot[k] = dv;
    out.frame[k] = s.e;
    out.log_det[k] = std::log(det) + 0.5 * std::log(geo.g.determinant()) - half_logdet0;
    out.u_frame[k] = s.e.inverse() * (dv + g_v * df) * df.inverse() * s.e;
  };

  if (metric.is_flat()) {
    for (std::size_t k = 0; k < m; ++k) {
      const double t = t_grid[k];
      const int n = step_count(steps, t);
      for (int q = 1; q <= n; ++q) {
        const double s = t * q / n;
        if (!(Mat2(Mat2::Identity() + s * dw).determinant() > 0.0))
          throw NonInvertibleError("flow Jacobian is not invertible", s);
      }
      State s = initial_state(Vec2(y + t * w0), w0, e0);
      s.phi.topLeftCorner<2, 2>() = Mat2::Identity();
      s.phi.topRightCorner<2, 2>() = t * Mat2::Identity();
      s.phi.bottomLeftCorner<2, 2>() = Mat2::Zero();
      s.phi.bottomRightCorner<2, 2>() = Mat2::Identity();
      emit(k, s);
    }
    return out;
  }

  const Options opt{true, true};
  for (int sign : {1, -1}) {
    std::vector<std::size_t> order;
    for (std::size_t k = 0; k < m; ++k)
      if (sign > 0 ? t_grid[k] >= 0.0 : t_grid[k] < 0.0) order.push_back(k);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return std::abs(t_grid[a]) < std::abs(t_grid[b]); });
    State s = initial_state(y, w0, e0);
    double t = 0.0;
    for (std::size_t k : order) {
      const double span = t_grid[k] - t;
      if (span != 0.0) {
        const int n = step_count(steps, span);
        const double h = span / n;
        for (int q = 0; q < n; ++q) {
          rk4_step(metric, s, h, opt);
          const Mat2 df = s.phi.topLeftCorner<2, 2>() + s.phi.topRightCorner<2, 2>() * dw;
          if (!(df.determinant() > 0.0)) throw NonInvertibleError("flow Jacobian is not invertible", t + (q + 1) * h);
        }
        t = t_grid[k];
      }
      emit(k, s);
    }
  }
  return out;
}

}  // namespace curvlab
