#include "curvlab/curvature.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "curvlab/error.hpp"
#include "curvlab/parallel.hpp"

namespace curvlab {
namespace {

// Christoffel symbols of the first kind, G[l](i, j) = Gamma_lij.
std::array<Mat2, 2> first_kind(const std::array<Mat2, 2>& dg) {
  std::array<Mat2, 2> out;
  for (int l = 0; l < 2; ++l)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) out[l](i, j) = 0.5 * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
  return out;
}

Christoffel raise(const Mat2& ginv, const std::array<Mat2, 2>& low) {
  Christoffel out;
  for (int k = 0; k < 2; ++k) out[k] = ginv(k, 0) * low[0] + ginv(k, 1) * low[1];
  return out;
}

}  // namespace

Christoffel christoffel_at(const LocalGeometry& geo) { return raise(geo.g.inverse(), first_kind(geo.dg)); }

std::array<Christoffel, 3> christoffel_with_derivatives(const LocalGeometry& geo) {
  const Mat2 ginv = geo.g.inverse();
  const std::array<Mat2, 2> low = first_kind(geo.dg);
  std::array<Christoffel, 3> out;
  out[0] = raise(ginv, low);
  for (int a = 0; a < 2; ++a) {
    // d_a Gamma_lij from second derivatives of g
    const std::array<Mat2, 2> d2{geo.second(a, 0), geo.second(a, 1)};
    std::array<Mat2, 2> dlow = first_kind(d2);
    const Mat2 dginv = -ginv * geo.dg[a] * ginv;
    for (int k = 0; k < 2; ++k)
      out[1 + a][k] = dginv(k, 0) * low[0] + dginv(k, 1) * low[1] + ginv(k, 0) * dlow[0] + ginv(k, 1) * dlow[1];
  }
  return out;
}

PointCurvature curvature_at(const LocalGeometry& geo) {
  const auto all = christoffel_with_derivatives(geo);
  PointCurvature pc;
  pc.gamma = all[0];
  pc.dgamma = {all[1], all[2]};
  const Christoffel& G = pc.gamma;
  for (int m = 0; m < 2; ++m)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          double r = pc.dgamma[j][m](i, k) - pc.dgamma[k][m](i, j);
          for (int s = 0; s < 2; ++s) r += G[m](j, s) * G[s](i, k) - G[m](k, s) * G[s](i, j);
          pc.riem(m, i, j, k) = r;
        }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) pc.ric(i, j) = pc.riem(0, i, 0, j) + pc.riem(1, i, 1, j);
  pc.gauss = 0.5 * (geo.g.inverse() * pc.ric).trace();
  return pc;
}

Mat2 jacobi_curvature(const Riemann& riem, const Mat2& g, const Vec2& v, const Mat2& e) {
  Mat2 out;
  for (int a = 0; a < 2; ++a) {
    // w = R(e_a, v) v
    Vec2 w = Vec2::Zero();
    for (int m = 0; m < 2; ++m)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k) w(m) += riem(m, i, j, k) * v(i) * e(j, a) * v(k);
    for (int b = 0; b < 2; ++b) out(a, b) = w.dot(g * e.col(b));
  }
  return out;
}

double CurvatureFields::christoffel_symmetry_defect() const {
  double d = 0.0;
  for (const auto& G : gamma)
    for (int k = 0; k < 2; ++k) d = std::max(d, std::abs(G[k](0, 1) - G[k](1, 0)));
  return d;
}

double CurvatureFields::max_abs_christoffel() const {
  double d = 0.0;
  for (const auto& G : gamma)
    for (int k = 0; k < 2; ++k) d = std::max(d, G[k].cwiseAbs().maxCoeff());
  return d;
}

double CurvatureFields::max_abs_riemann() const {
  double d = 0.0;
  for (const auto& R : riem)
    for (double v : R.r) d = std::max(d, std::abs(v));
  return d;
}

double CurvatureFields::ricci_symmetry_defect() const { return ric.symmetry_defect(); }

double CurvatureFields::proportionality_residual() const {
  double num = 0.0;
  const double den = ric.sup_norm();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      num = std::max(num, (ric.matrix(i, j) - gauss(i, j) * g.matrix(i, j)).cwiseAbs().maxCoeff());
  return den > 0.0 ? num / den : num;
}

namespace {

CurvatureFields compute(int n, const std::function<LocalGeometry(int, int)>& geo, bool riemann, std::string source) {
  CurvatureFields f;
  f.n = n;
  f.source = std::move(source);
  f.g = PeriodicGridField(n, Rank::kMatrix);
  f.gamma.resize(static_cast<std::size_t>(n) * n);
  if (riemann) {
    f.riem.resize(f.gamma.size());
    f.ric = PeriodicGridField(n, Rank::kMatrix);
    f.gauss = PeriodicGridField(n, Rank::kScalar);
  }
  parallel_for(n, [&](std::ptrdiff_t jj) {
    const int j = static_cast<int>(jj);
    for (int i = 0; i < n; ++i) {
      const LocalGeometry lg = geo(i, j);
      const std::size_t k = f.g.index(i, j);
      f.g.set_matrix(i, j, lg.g);
      if (!(lg.g.determinant() > 0.0))
        throw Error(ErrorCode::kNotSpd, "singular metric at node (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      if (!riemann) {
        f.gamma[k] = christoffel_at(lg);
        continue;
      }
      const PointCurvature pc = curvature_at(lg);
      f.gamma[k] = pc.gamma;
      f.riem[k] = pc.riem;
      f.ric.set_matrix(i, j, pc.ric);
      f.gauss(i, j) = pc.gauss;
    }
  });
  return f;
}

void require_direct(const MetricModel& model, bool second) {
  if (!model.is_sampled()) throw Error(ErrorCode::kInvalidArgument, "metric has not been sampled");
  if (second && (model.regularity() == Regularity::kC1 || !model.has_second_derivatives()))
    throw Error(ErrorCode::kUnsupported,
                "direct curvature needs a.e. second derivatives (smooth or C11 model with expressions)");
}

}  // namespace

CurvatureFields christoffel(const SmoothedMetric& m) {
  return compute(m.n, [&](int i, int j) { return m.at_node(i, j); }, false, "smoothed");
}

CurvatureFields christoffel(const MetricModel& model) {
  require_direct(model, false);
  return compute(model.resolution(), [&](int i, int j) { return model.geometry_at_node(i, j); }, false, "direct");
}

CurvatureFields riemann_ricci(const SmoothedMetric& m) {
  return compute(m.n, [&](int i, int j) { return m.at_node(i, j); }, true,
                 "smoothed/" + m.second_derivative_source);
}

CurvatureFields riemann_ricci(const MetricModel& model) {
  require_direct(model, true);
  return compute(model.resolution(), [&](int i, int j) { return model.geometry_at_node(i, j); }, true,
                 "direct/a.e.");
}

PairingReport distributional_pairing(const MetricModel& model, const VectorExpr& x, const FieldExpr& omega,
                                     const std::vector<double>& eps_list, double tolerance) {
  if (!model.is_sampled()) throw Error(ErrorCode::kInvalidArgument, "metric has not been sampled");
  const int n = model.resolution();
  const PeriodicGridField x0 = x[0].sample(n), x1 = x[1].sample(n), w = omega.sample(n);
  auto pair = [&](const CurvatureFields& f) {
    PeriodicGridField q(n, Rank::kScalar);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Vec2 v(x0(i, j), x1(i, j));
        q(i, j) = v.dot(f.ric.matrix(i, j) * v);
      }
    return integrate(q, w);
  };
  PairingReport r;
  for (double eps : eps_list) {
    r.eps.push_back(eps);
    r.values.push_back(pair(riemann_ricci(smooth(model, eps))));
  }
  const std::size_t m = r.values.size();
  if (m >= 2) {
    const double ratio = r.eps[m - 2] / r.eps[m - 1];
    const double p = ratio * ratio;
    r.extrapolated = (p * r.values[m - 1] - r.values[m - 2]) / (p - 1.0);
    r.spread = std::abs(r.values[m - 1] - r.values[m - 2]);
  } else if (m == 1) {
    r.extrapolated = r.values[0];
  }
  r.converged = m >= 2 && r.spread <= tolerance;
  if (model.regularity() != Regularity::kC1 && model.has_second_derivatives()) r.direct = pair(riemann_ricci(model));
  return r;
}

BoundEntry effective_bound(const CurvatureFields& f, double eps) {
  BoundEntry best;
  best.eps = eps;
  best.k_eff = INFINITY;
  for (int j = 0; j < f.n; ++j)
    for (int i = 0; i < f.n; ++i) {
      const GeneralizedEigen ev = generalized_eigen(f.ric.matrix(i, j), f.g.matrix(i, j));
      if (ev.lambda_min < best.k_eff) {
        best.k_eff = ev.lambda_min;
        best.i = i;
        best.j = j;
        best.vector = ev.v_min;
      }
    }
  return best;
}

BoundReport bound_check(const std::vector<CurvatureFields>& fields, const std::vector<double>& eps_list, double k,
                        const std::vector<double>& deltas, int tail) {
  if (fields.size() != eps_list.size()) throw Error(ErrorCode::kInvalidArgument, "one curvature field per eps");
  for (std::size_t s = 1; s < eps_list.size(); ++s)
    if (!(eps_list[s] < eps_list[s - 1])) throw Error(ErrorCode::kInvalidArgument, "eps list must be decreasing");
  BoundReport r;
  r.k = k;
  r.tail = tail;
  for (std::size_t s = 0; s < fields.size(); ++s) r.entries.push_back(effective_bound(fields[s], eps_list[s]));
  const int m = static_cast<int>(r.entries.size());
  for (double delta : deltas) {
    if (!(delta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "delta must be positive");
    BoundVerdict v;
    v.delta = delta;
    const double target = k - delta;
    v.holds = m >= tail;
    for (int s = std::max(0, m - tail); s < m; ++s) {
      const BoundEntry& e = r.entries[s];
      if (e.k_eff < target) {
        v.holds = false;
        if (!v.witness || e.k_eff < v.witness->k_eff) v.witness = e;
      }
    }
    for (int s = m - 1; s >= 0 && r.entries[s].k_eff >= target; --s) v.eps0 = r.entries[s].eps;
    if (!v.holds && !v.witness && m > 0) v.witness = r.entries.back();
    r.verdicts.push_back(v);
  }
  return r;
}

BoundReport bound_check(const MetricModel& model, double k, const std::vector<double>& deltas,
                        const std::vector<double>& eps_list, int tail) {
  std::vector<CurvatureFields> fields;
  for (double eps : eps_list) fields.push_back(riemann_ricci(smooth(model, eps)));
  return bound_check(fields, eps_list, k, deltas, tail);
}

nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json j;
  j["K"] = r.k;
  j["tail"] = r.tail;
  auto entry = [](const BoundEntry& e) {
    return nlohmann::json{{"eps", e.eps},
                          {"K_eff", e.k_eff},
                          {"argmin_node", {e.i, e.j}},
                          {"argmin_vector", {e.vector.x(), e.vector.y()}}};
  };
  j["entries"] = nlohmann::json::array();
  for (const auto& e : r.entries) j["entries"].push_back(entry(e));
  j["verdicts"] = nlohmann::json::array();
  for (const auto& v : r.verdicts) {
    nlohmann::json o{{"delta", v.delta}, {"holds", v.holds}};
    if (v.eps0) o["eps0"] = *v.eps0;
    if (v.witness) o["witness"] = entry(*v.witness);
    j["verdicts"].push_back(o);
  }
  return j;
}

}  // namespace curvlab
