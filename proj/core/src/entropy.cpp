#include "curvlab/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "curvlab/error.hpp"
#include "curvlab/io.hpp"
#include "curvlab/parallel.hpp"

namespace curvlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t index_of(const std::vector<double>& t, double value) {
  for (std::size_t k = 0; k < t.size(); ++k)
    if (t[k] == value) return k;
  throw Error(ErrorCode::kInvalidArgument, "time grid must contain " + format_double(value));
}

}  // namespace

EntropyFunction EntropyFunction::boltzmann() {
  EntropyFunction f;
  f.name_ = "boltzmann";
  f.boltzmann_ = true;
  f.u_ = [](double r) { return r > 0.0 ? r * std::log(r) : 0.0; };
  f.du_ = [](double r) { return r > 0.0 ? std::log(r) + 1.0 : -kInf; };
  return f;
}

EntropyFunction EntropyFunction::power(double m) {
  if (!(m > 1.0)) throw Error(ErrorCode::kInvalidArgument, "power entropy needs m > 1");
  EntropyFunction f;
  f.name_ = "power:" + format_double(m);
  f.u_ = [m](double r) { return (std::pow(r, m) - r) / (m - 1.0); };
  f.du_ = [m](double r) { return (m * std::pow(r, m - 1.0) - 1.0) / (m - 1.0); };
  return f;
}

EntropyFunction EntropyFunction::custom(std::string name, Fn u, Fn du_right) {
  if (!u) throw Error(ErrorCode::kInvalidArgument, "entropy function handle is empty");
  if (std::abs(u(0.0)) > 1e-14) throw Error(ErrorCode::kInvalidArgument, "entropy function must vanish at 0");
  EntropyFunction f;
  f.name_ = std::move(name);
  f.u_ = u;
  if (du_right) {
    f.du_ = std::move(du_right);
  } else {
    f.du_ = [u](double r) {
      const double h = 1e-7 * std::max(1.0, r);
      return (u(r + h) - u(r)) / h;
    };
  }
  return f;
}

EntropyFunction EntropyFunction::from_string(const std::string& spec) {
  if (spec == "boltzmann") return boltzmann();
  if (spec.rfind("power:", 0) == 0) return power(std::stod(spec.substr(6)));
  throw Error(ErrorCode::kInvalidArgument, "unknown entropy function '" + spec + "'");
}

double EntropyFunction::operator()(double r) const { return u_(r); }
double EntropyFunction::derivative(double r) const { return du_(r); }

double EntropyFunction::slope_at_infinity() const {
  const double s1 = u_(1e6) / 1e6;
  const double s2 = u_(1e12) / 1e12;
  if (!std::isfinite(s2) || s2 - s1 > 1.0) return kInf;
  return s2;
}

bool EntropyFunction::convex_on_grid(double tol) const {
  std::vector<double> r;
  for (int k = 0; k <= 240; ++k) r.push_back(1e-6 * std::pow(10.0, k / 20.0));
  r.insert(r.begin(), 0.0);
  double prev = -kInf;
  for (std::size_t k = 0; k + 1 < r.size(); ++k) {
    const double slope = (u_(r[k + 1]) - u_(r[k])) / (r[k + 1] - r[k]);
    if (slope < prev - tol * (1.0 + std::abs(prev))) return false;
    prev = slope;
  }
  return true;
}

bool EntropyFunction::in_dc_infinity(double tol) const {
  auto psi = [&](double lam) { return std::exp(lam) * u_(std::exp(-lam)); };
  const double h = 0.05;
  for (double lam = -14.0 + h; lam < 14.0; lam += h) {
    const double a = psi(lam - h), b = psi(lam), c = psi(lam + h);
    const double scale = std::max({1.0, std::abs(a), std::abs(b), std::abs(c)});
    if (a - 2.0 * b + c < -tol * scale) return false;
  }
  return true;
}

double entropy_value(const EntropyFunction& u, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.size() != nu.size()) throw Error(ErrorCode::kSupportMismatch, "entropy: supports differ in size");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (periodic_displacement(Vec2(mu.points[i] - nu.points[i])).norm() > 1e-12)
      throw Error(ErrorCode::kSupportMismatch, "entropy: supports differ at point " + std::to_string(i));
    if (nu.weights[i] <= 0.0) {
      if (mu.weights[i] > 0.0)
        throw Error(ErrorCode::kSupportMismatch, "entropy: measure is not absolutely continuous");
      continue;
    }
    s += u(mu.weights[i] / nu.weights[i]) * nu.weights[i];
  }
  return s;
}

LambdaK lambda_k_detail(const EntropyFunction& u, double k) {
  LambdaK out;
  if (k == 0.0) return out;
  if (u.is_boltzmann()) {
    out.value = k;
    return out;
  }
  auto f = [&](double r) { return k * (r * u.derivative(r) - u(r)) / r; };
  const int count = 241;
  std::vector<double> lr(count), val(count);
  for (int i = 0; i < count; ++i) {
    lr[i] = std::log(1e-6) + i * (std::log(1e12) / (count - 1));
    val[i] = f(std::exp(lr[i]));
  }
  const int best = static_cast<int>(std::min_element(val.begin(), val.end()) - val.begin());
  double value = val[best];
  if (best > 0 && best + 1 < count) {
    // golden section in log r
    double a = lr[best - 1], b = lr[best + 1];
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = f(std::exp(c)), fd = f(std::exp(d));
    for (int it = 0; it < 100; ++it) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - phi * (b - a);
        fc = f(std::exp(c));
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + phi * (b - a);
        fd = f(std::exp(d));
      }
    }
    value = std::min({value, fc, fd});
  } else {
    // follow the edge outward until the values settle
    const double dir = best == 0 ? -1.0 : 1.0;
    double x = lr[best], prev = value;
    bool settled = false;
    for (int it = 0; it < 60; ++it) {
      x += dir * std::log(10.0);
      const double r = std::exp(x);
      if (r == 0.0 || !std::isfinite(r)) break;
      const double fx = f(r);
      if (!std::isfinite(fx)) break;
      value = std::min(value, fx);
      if (std::abs(fx - prev) <= 1e-12 * (1.0 + std::abs(fx))) {
        settled = true;
        break;
      }
      prev = fx;
    }
    if (!settled && std::abs(value) > 1e8) {
      out.divergent = true;
      out.value = -kInf;
      return out;
    }
  }
  out.value = value;
  return out;
}

double lambda_k(const EntropyFunction& u, double k) { return lambda_k_detail(u, k).value; }

double total_volume(const MetricField& metric, int n) {
  double s = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      s += std::sqrt(metric.at(Vec2(static_cast<double>(i) / n, static_cast<double>(j) / n), 0).g.determinant());
  return s / (static_cast<double>(n) * n);
}

std::vector<double> lagrangian_margins(const EntropyFunction& u, const DisplacementFamily& fam,
                                       const std::vector<double>& weights, double lambda, double vol) {
  const std::size_t m = fam.base.size();
  if (weights.size() != m) throw Error(ErrorCode::kInvalidArgument, "margins: weight count mismatch");
  std::vector<double> ent(fam.t.size(), 0.0);
  double w2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) w2 += weights[i] * fam.speed_sq[i];
  for (std::size_t k = 0; k < fam.t.size(); ++k)
    for (std::size_t i = 0; i < m; ++i) {
      if (weights[i] <= 0.0) continue;
      const double eta = weights[i] / fam.node_volume[i];
      const double jac = std::exp(fam.log_det[k][i]);
      ent[k] += u(vol * eta / jac) * jac * fam.node_volume[i] / vol;
    }
  const std::size_t k0 = index_of(fam.t, 0.0), k1 = index_of(fam.t, 1.0);
  std::vector<double> margin(fam.t.size());
  for (std::size_t k = 0; k < fam.t.size(); ++k) {
    const double t = fam.t[k];
    margin[k] = t * ent[k1] + (1.0 - t) * ent[k0] - 0.5 * lambda * t * (1.0 - t) * w2 - ent[k];
  }
  return margin;
}

namespace {

struct EulerianResult {
  double entropy = 0.0;
  double mass = 0.0;
};

// Densities on the grid nodes covered by F_t(supp mu0), through Newton
// inversion of F_t.
EulerianResult eulerian_entropy(const MetricField& metric, const Potential& phi, const BumpMeasure& mu0,
                                const DisplacementFamily& fam, std::size_t k, const EntropyFunction& u, double vol,
                                int steps, int refine) {
  const int n = mu0.n * refine;
  const double h = 1.0 / n;
  const double reach = 3.0 / mu0.n;
  const double t = fam.t[k];
  const auto& pos = fam.position[k];
  double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
  for (const Vec2& p : pos) {
    x0 = std::min(x0, p.x());
    x1 = std::max(x1, p.x());
    y0 = std::min(y0, p.y());
    y1 = std::max(y1, p.y());
  }
  const int i0 = static_cast<int>(std::floor(x0 * n)) - 2, i1 = static_cast<int>(std::ceil(x1 * n)) + 2;
  const int j0 = static_cast<int>(std::floor(y0 * n)) - 2, j1 = static_cast<int>(std::ceil(y1 * n)) + 2;
  const int ni = i1 - i0 + 1, nj = j1 - j0 + 1;
  std::vector<double> ent(static_cast<std::size_t>(ni) * nj, 0.0), mass(ent.size(), 0.0);
  parallel_for(static_cast<std::ptrdiff_t>(ent.size()), [&](std::ptrdiff_t idx) {
    const Vec2 x((i0 + idx % ni) * h, (j0 + idx / ni) * h);
    std::size_t near = 0;
    double best = kInf;
    for (std::size_t i = 0; i < pos.size(); ++i) {
      const double d = (pos[i] - x).squaredNorm();
      if (d < best) {
        best = d;
        near = i;
      }
    }
    if (std::sqrt(best) > reach) return;
    double eta = 0.0;
    if (t == 0.0) {
      eta = mu0.density(x);
    } else {
      Vec2 y = fam.base[near] + (x - pos[near]);
      double res = kInf;
      double log_det = 0.0;
      for (int it = 0; it < 30; ++it) {
        const FlowJacobian fj = flow_jacobian(metric, phi, y, {t}, steps);
        const Vec2 r = fj.position[0] - x;
        res = r.norm();
        log_det = fj.log_det[0];
        if (res <= 1e-13) break;
        y -= fj.jacobian[0].inverse() * r;
      }
      if (res > 1e-11) {
        if (mu0.density(y) == 0.0) return;
        throw ConvergenceError("inverse flow did not converge", res);
      }
      eta = mu0.density(y) * std::exp(-log_det);
    }
    if (eta <= 0.0) return;
    const double dvol = std::sqrt(metric.at(wrap_unit(x), 0).g.determinant()) * h * h;
    ent[idx] = u(vol * eta) * dvol / vol;
    mass[idx] = eta * dvol;
  });
  EulerianResult r;
  for (std::size_t q = 0; q < ent.size(); ++q) {
    r.entropy += ent[q];
    r.mass += mass[q];
  }
  return r;
}

}  // namespace

ConvexityReport convexity_check(const MetricField& metric, const Potential& phi, const BumpMeasure& mu0, double k,
                                const EntropyFunction& u, const ConvexityOptions& options) {
  std::vector<double> t_all = options.t;
  t_all.push_back(0.0);
  t_all.push_back(1.0);
  std::sort(t_all.begin(), t_all.end());
  t_all.erase(std::unique(t_all.begin(), t_all.end()), t_all.end());

  const LambdaK lam = lambda_k_detail(u, k);
  if (lam.divergent) throw Error(ErrorCode::kInvalidArgument, "lambda_K is -inf for this entropy");
  ConvexityReport rep;
  rep.lambda = lam.value;
  rep.tolerance = options.tolerance;
  rep.t = t_all;

  const DisplacementFamily fam = displacement_interpolation(metric, phi, mu0, t_all, options.steps);
  const double vol = total_volume(metric, mu0.n);
  const double w2_sq = fam.lagrangian_w2_sq();
  rep.w2 = std::sqrt(w2_sq);

  rep.margin = lagrangian_margins(u, fam, fam.weights, rep.lambda, vol);
  const std::size_t k0 = index_of(t_all, 0.0), k1 = index_of(t_all, 1.0);
  for (std::size_t q = 0; q < t_all.size(); ++q) {
    double ent = 0.0;
    for (std::size_t i = 0; i < fam.base.size(); ++i) {
      const double jac = std::exp(fam.log_det[q][i]);
      ent += u(vol * fam.eta0[i] / jac) * jac * fam.node_volume[i] / vol;
    }
    rep.lhs.push_back(ent);
  }
  for (std::size_t q = 0; q < t_all.size(); ++q) {
    const double t = t_all[q];
    rep.rhs.push_back(t * rep.lhs[k1] + (1.0 - t) * rep.lhs[k0] - 0.5 * rep.lambda * t * (1.0 - t) * w2_sq);
  }

  if (options.eulerian) {
    std::vector<double> masses;
    for (std::size_t q = 0; q < t_all.size(); ++q) {
      const EulerianResult e = eulerian_entropy(metric, phi, mu0, fam, q, u, vol, options.steps,
                                                  std::max(1, options.eulerian_refine));
      rep.eulerian_lhs.push_back(e.entropy);
      masses.push_back(e.mass);
    }
    for (double mass : masses) rep.mass_error = std::max(rep.mass_error, std::abs(mass - masses[k0]));
    for (std::size_t q = 0; q < t_all.size(); ++q) {
      const double t = t_all[q];
      const double rhs = t * rep.eulerian_lhs[k1] + (1.0 - t) * rep.eulerian_lhs[k0] -
                         0.5 * rep.lambda * t * (1.0 - t) * w2_sq;
      rep.eulerian_margin.push_back(rhs - rep.eulerian_lhs[q]);
      rep.form_gap = std::max(rep.form_gap, std::abs(rep.eulerian_margin.back() - rep.margin[q]));
    }
    rep.forms_agree = rep.form_gap <= 1e-4;
  }

  if (options.solver_particles > 0) {
    const std::size_t m = fam.base.size();
    const std::size_t stride = std::max<std::size_t>(1, (m + options.solver_particles - 1) / options.solver_particles);
    std::vector<Vec2> src, dst;
    std::vector<double> w;
    double total = 0.0, constructed = 0.0;
    for (std::size_t i = 0; i < m; i += stride) {
      src.push_back(fam.base[i]);
      dst.push_back(fam.position[k1][i]);
      w.push_back(fam.weights[i]);
      total += fam.weights[i];
      constructed += fam.weights[i] * fam.speed_sq[i];
    }
    for (double& x : w) x /= total;
    constructed /= total;
    LogMapOptions lo;
    lo.steps = 64;
    const Eigen::MatrixXd cost = cost_matrix(metric, src, dst, lo);
    const double solved = 2.0 * solve_exact(w, w, cost).plan.cost;
    rep.w2_solver = std::sqrt(std::max(0.0, solved));
    rep.w2_sq_gap = std::abs(solved - constructed);
  }

  rep.verdict = std::all_of(rep.margin.begin(), rep.margin.end(),
                            [&](double m) { return std::isfinite(m) && m >= -options.tolerance; });
  return rep;
}

nlohmann::json to_json(const ConvexityReport& r) {
  nlohmann::json j;
  j["lambda"] = r.lambda;
  j["t"] = r.t;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["margin"] = r.margin;
  j["verdict"] = r.verdict;
  j["tolerance"] = r.tolerance;
  j["w2"] = r.w2;
  j["w2_source"] = r.w2_source;
  if (r.w2_solver) j["w2_solver"] = *r.w2_solver;
  if (r.w2_sq_gap) j["w2_sq_gap"] = *r.w2_sq_gap;
  if (!r.eulerian_lhs.empty()) {
    j["eulerian_lhs"] = r.eulerian_lhs;
    j["eulerian_margin"] = r.eulerian_margin;
    j["form_gap"] = r.form_gap;
    j["forms_agree"] = r.forms_agree;
    j["mass_error"] = r.mass_error;
  }
  return j;
}

}  // namespace curvlab
