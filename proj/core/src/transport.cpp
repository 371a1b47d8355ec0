#include "curvlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "curvlab/curvature.hpp"
#include "curvlab/error.hpp"
#include "curvlab/io.hpp"
#include "curvlab/parallel.hpp"

namespace curvlab {

void DiscreteMeasure::validate() const {
  if (points.size() != weights.size()) throw Error(ErrorCode::kInvalidArgument, "measure: points/weights size mismatch");
  if (!density.empty() && density.size() != points.size())
    throw Error(ErrorCode::kInvalidArgument, "measure: density size mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "measure: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw Error(ErrorCode::kInvalidArgument, "measure: weights sum to " + format_double(total));
}

DiscreteMeasure DiscreteMeasure::dirac(const Vec2& p) {
  DiscreteMeasure m;
  m.points = {p};
  m.weights = {1.0};
  return m;
}

DiscreteMeasure DiscreteMeasure::uniform(const std::vector<Vec2>& points) {
  if (points.empty()) throw Error(ErrorCode::kInvalidArgument, "measure: empty support");
  DiscreteMeasure m;
  m.points = points;
  m.weights.assign(points.size(), 1.0 / points.size());
  return m;
}

double BumpDensity::operator()(const Vec2& p) const {
  const double s2 = periodic_displacement(Vec2(p - center)).squaredNorm() / (radius * radius);
  if (s2 >= 1.0) return 0.0;
  return scale * std::exp(-1.0 / (1.0 - s2));
}

BumpMeasure bump_measure(const MetricField& metric, const Vec2& center, double radius, int n) {
  if (!(radius > 0.0) || radius >= 0.25) throw Error(ErrorCode::kInvalidArgument, "bump radius must lie in (0, 1/4)");
  if (n < 8) throw Error(ErrorCode::kInvalidArgument, "bump grid too coarse");
  BumpMeasure out;
  out.n = n;
  out.density.center = center;
  out.density.radius = radius;
  out.measure.reference = "vol_g";
  const double h = 1.0 / n;
  const int span = static_cast<int>(std::ceil(radius * n)) + 1;
  const int ci = static_cast<int>(std::lround(center.x() * n));
  const int cj = static_cast<int>(std::lround(center.y() * n));
  double total = 0.0;
  std::vector<double> raw;
  for (int j = cj - span; j <= cj + span; ++j)
    for (int i = ci - span; i <= ci + span; ++i) {
      // nearest lift to the center keeps the support contiguous
      const Vec2 node(i * h, j * h);
      const double e = out.density(node);
      if (e <= 0.0) continue;
      const double dvol = std::sqrt(metric.at(wrap_unit(node), 0).g.determinant()) * h * h;
      out.measure.points.push_back(node);
      out.node_volume.push_back(dvol);
      raw.push_back(e);
      total += e * dvol;
    }
  if (raw.empty()) throw Error(ErrorCode::kInvalidArgument, "bump contains no grid node");
  out.density.scale = 1.0 / total;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    out.measure.density.push_back(raw[k] / total);
    out.measure.weights.push_back(raw[k] * out.node_volume[k] / total);
  }
  return out;
}

std::vector<double> TransportPlan::row_sums() const {
  std::vector<double> s(rows, 0.0);
  for (const auto& e : entries) s[e.i] += e.weight;
  return s;
}

std::vector<double> TransportPlan::col_sums() const {
  std::vector<double> s(cols, 0.0);
  for (const auto& e : entries) s[e.j] += e.weight;
  return s;
}

Eigen::MatrixXd TransportPlan::dense() const {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& e : entries) p(e.i, e.j) += e.weight;
  return p;
}

double TransportPlan::marginal_error(const std::vector<double>& a, const std::vector<double>& b) const {
  const auto r = row_sums();
  const auto c = col_sums();
  double worst = 0.0;
  for (int i = 0; i < rows; ++i) worst = std::max(worst, std::abs(r[i] - a[i]));
  for (int j = 0; j < cols; ++j) worst = std::max(worst, std::abs(c[j] - b[j]));
  return worst;
}

Eigen::MatrixXd cost_matrix(const MetricField& metric, const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                            const LogMapOptions& options) {
  Eigen::MatrixXd d = distance_matrix(metric, a, b, options);
  return 0.5 * d.array().square().matrix();
}

namespace {

std::string support_text(const std::vector<Vec2>& pts) {
  std::string s;
  for (const Vec2& p : pts) {
    s += format_double(p.x());
    s += ',';
    s += format_double(p.y());
    s += ';';
  }
  return s;
}

}  // namespace

Eigen::MatrixXd cost_matrix(const MetricField& metric, const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                            const CostCache& cache, const LogMapOptions& options) {
  const std::string key = fnv1a_hex(cache.metric_key + "|" + support_text(a) + "|" + support_text(b) + "|" +
                                    std::to_string(options.steps));
  const std::string header = "# curvlab-cost v1 key=" + key + " rows=" + std::to_string(a.size()) +
                             " cols=" + std::to_string(b.size());
  const auto path = cache.directory / ("cost-" + key + ".csv");
  {
    std::ifstream in(path);
    std::string line;
    if (in && std::getline(in, line) && line == header) {
      Eigen::MatrixXd c(a.size(), b.size());
      bool ok = true;
      for (Eigen::Index i = 0; ok && i < c.rows(); ++i) {
        if (!std::getline(in, line)) {
          ok = false;
          break;
        }
        std::istringstream row(line);
        std::string cell;
        for (Eigen::Index j = 0; j < c.cols(); ++j) {
          if (!std::getline(row, cell, ',')) {
            ok = false;
            break;
          }
          c(i, j) = std::stod(cell);
        }
      }
      if (ok) return c;
    }
  }
  Eigen::MatrixXd c = cost_matrix(metric, a, b, options);
  std::filesystem::create_directories(cache.directory);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write cost cache " + path.string());
  out << header << '\n';
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) out << (j ? "," : "") << format_double(c(i, j));
    out << '\n';
  }
  return c;
}

std::vector<double> c_transform(const std::vector<double>& psi, const Eigen::MatrixXd& cost) {
  if (static_cast<Eigen::Index>(psi.size()) != cost.rows())
    throw Error(ErrorCode::kInvalidArgument, "c_transform: size mismatch");
  std::vector<double> out(cost.cols(), std::numeric_limits<double>::infinity());
  for (Eigen::Index j = 0; j < cost.cols(); ++j)
    for (Eigen::Index i = 0; i < cost.rows(); ++i) out[j] = std::min(out[j], cost(i, j) - psi[i]);
  return out;
}

std::vector<double> c_transform_target(const std::vector<double>& phi, const Eigen::MatrixXd& cost) {
  if (static_cast<Eigen::Index>(phi.size()) != cost.cols())
    throw Error(ErrorCode::kInvalidArgument, "c_transform: size mismatch");
  std::vector<double> out(cost.rows(), std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < cost.rows(); ++i)
    for (Eigen::Index j = 0; j < cost.cols(); ++j) out[i] = std::min(out[i], cost(i, j) - phi[j]);
  return out;
}

ConcavityResult is_c_concave(const std::vector<double>& psi, const Eigen::MatrixXd& cost, double tolerance) {
  if (cost.rows() != cost.cols()) throw Error(ErrorCode::kInvalidArgument, "c-concavity needs a square cost");
  const auto psi_cc = c_transform_target(c_transform(psi, cost), cost);
  ConcavityResult r;
  for (std::size_t i = 0; i < psi.size(); ++i) r.residual = std::max(r.residual, std::abs(psi_cc[i] - psi[i]));
  r.concave = r.residual <= tolerance;
  return r;
}

GlaudoReport glaudo_check(const MetricField& metric, const Potential& phi, double eps, std::optional<double> c_star,
                          double sectional_upper, double diameter, int n) {
  if (!c_star) throw Error(ErrorCode::kInvalidArgument, "c-concavity criterion needs the constant C*");
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::kInvalidArgument, "eps must lie in (0, 1)");
  GlaudoReport r;
  r.hessian_max = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Vec2 p(static_cast<double>(i) / n, static_cast<double>(j) / n);
      const Mat2 g = metric.at(p, 0).g;
      const Vec2 grad = riemannian_gradient(metric, phi, p);
      r.gradient_sup = std::max(r.gradient_sup, std::sqrt(grad.dot(g * grad)));
      const Mat2 h = riemannian_hessian(metric, phi, p);
      r.hessian_max = std::max(r.hessian_max, generalized_eigen(0.5 * (h + h.transpose()), g).lambda_max);
    }
  r.gradient_bound = *c_star;
  if (sectional_upper > 0.0) r.gradient_bound = std::min(r.gradient_bound, eps / (3.0 * sectional_upper * diameter));
  r.gradient_ok = r.gradient_sup <= r.gradient_bound;
  r.hessian_ok = r.hessian_max <= 1.0 - eps;
  r.passes = r.gradient_ok && r.hessian_ok;
  return r;
}

std::vector<Vec2> monge_map(const MetricField& metric, const Potential& psi, const std::vector<Vec2>& points,
                            int steps) {
  std::vector<Vec2> out(points.size());
  parallel_for(static_cast<std::ptrdiff_t>(points.size()), [&](std::ptrdiff_t i) {
    out[i] = exp_map(metric, points[i], -riemannian_gradient(metric, psi, points[i]), steps);
  });
  return out;
}

DiscreteMeasure DisplacementFamily::measure(std::size_t k) const {
  DiscreteMeasure m;
  m.points = position.at(k);
  m.weights = weights;
  m.density = density.at(k);
  m.reference = "vol_g";
  return m;
}

double DisplacementFamily::mass(std::size_t k) const {
  double s = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) s += density[k][i] * std::exp(log_det[k][i]) * node_volume[i];
  return s;
}

double DisplacementFamily::lagrangian_w2_sq() const {
  double s = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) s += weights[i] * speed_sq[i];
  return s;
}

DisplacementFamily displacement_interpolation(const MetricField& metric, const Potential& phi, const BumpMeasure& mu0,
                                              const std::vector<double>& t_list, int steps) {
  for (double t : t_list)
    if (t < 0.0 || t > 1.0) throw Error(ErrorCode::kInvalidArgument, "interpolation times must lie in [0, 1]");
  const std::size_t m = mu0.measure.size();
  DisplacementFamily fam;
  fam.t = t_list;
  fam.base = mu0.measure.points;
  fam.weights = mu0.measure.weights;
  fam.eta0 = mu0.measure.density;
  fam.node_volume = mu0.node_volume;
  fam.position.assign(t_list.size(), std::vector<Vec2>(m));
  fam.log_det.assign(t_list.size(), std::vector<double>(m));
  fam.density.assign(t_list.size(), std::vector<double>(m));
  fam.speed_sq.assign(m, 0.0);
  parallel_for(static_cast<std::ptrdiff_t>(m), [&](std::ptrdiff_t i) {
    const FlowJacobian fj = flow_jacobian(metric, phi, fam.base[i], t_list, steps);
    const Mat2 g0 = metric.at(fam.base[i], 0).g;
    fam.speed_sq[i] = fj.velocity0.dot(g0 * fj.velocity0);
    for (std::size_t k = 0; k < t_list.size(); ++k) {
      fam.position[k][i] = fj.position[k];
      fam.log_det[k][i] = fj.log_det[k];
      fam.density[k][i] = fam.eta0[i] * std::exp(-fj.log_det[k]);
    }
  });
  for (std::size_t k = 0; k < t_list.size(); ++k)
    if (std::abs(fam.mass(k) - 1.0) > 1e-6)
      throw Error(ErrorCode::kVerification, "pushforward mass drifted to " + format_double(fam.mass(k)));
  return fam;
}

}  // namespace curvlab
