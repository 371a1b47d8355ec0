#include "curvlab/metric.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "curvlab/error.hpp"
#include "curvlab/io.hpp"
#include "curvlab/parallel.hpp"

namespace curvlab {

struct MetricModel::Expressions {
  bool conformal = false;
  nlohmann::json spec;
  // conformal factor and its derivatives (x, y; xx, xy, yy)
  FieldExpr u;
  std::array<FieldExpr, 2> du;
  std::array<FieldExpr, 3> d2u;
  // components 11, 12, 22 and their derivatives
  std::array<FieldExpr, 3> g;
  std::array<std::array<FieldExpr, 3>, 2> dg;
  std::array<std::array<FieldExpr, 3>, 3> d2g;
};

namespace {

Mat2 sym(double a, double b, double c) {
  Mat2 m;
  m << a, b, b, c;
  return m;
}

PeriodicGridField matrix_field(int n, const std::function<Mat2(int, int)>& f) {
  PeriodicGridField out(n, Rank::kMatrix);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) out.set_matrix(i, j, f(i, j));
  return out;
}

// Convolution of a symmetric matrix field, computing the off-diagonal once.
PeriodicGridField convolve_symmetric(const PeriodicGridField& m, const Kernel& k) {
  const int n = m.resolution();
  PeriodicGridField out(n, Rank::kMatrix);
  for (int c : {0, 1, 3}) {
    PeriodicGridField s(n, Rank::kScalar);
    const auto src = m.component(c);
    std::copy(src.begin(), src.end(), s.component(0).begin());
    const PeriodicGridField r = convolve(s, k);
    const auto res = r.component(0);
    std::copy(res.begin(), res.end(), out.component(c).begin());
    if (c == 1) std::copy(res.begin(), res.end(), out.component(2).begin());
  }
  return out;
}

}  // namespace

MetricModel MetricModel::flat() { return conformal(FieldExpr::constant(0.0)); }

MetricModel MetricModel::conformal(const FieldExpr& u, std::optional<Regularity> tag) {
  u.check_periodic();
  auto e = std::make_shared<Expressions>();
  e->conformal = true;
  e->u = u;
  e->du = {u.dx(), u.dy()};
  e->d2u = {e->du[0].dx(), e->du[0].dy(), e->du[1].dy()};
  e->spec = {{"kind", "conformal"}, {"u", u.str()}};
  MetricModel m;
  m.exprs_ = e;
  m.tag_ = tag.value_or(u.inferred_regularity());
  if (tag) e->spec["regularity"] = to_string(*tag);
  return m;
}

MetricModel MetricModel::components(const FieldExpr& g11, const FieldExpr& g12, const FieldExpr& g22,
                                    std::optional<Regularity> tag) {
  auto e = std::make_shared<Expressions>();
  e->g = {g11, g12, g22};
  bool kinks = false;
  for (int c = 0; c < 3; ++c) {
    e->g[c].check_periodic();
    kinks = kinks || e->g[c].has_kinks();
    e->dg[0][c] = e->g[c].dx();
    e->dg[1][c] = e->g[c].dy();
    e->d2g[0][c] = e->dg[0][c].dx();
    e->d2g[1][c] = e->dg[0][c].dy();
    e->d2g[2][c] = e->dg[1][c].dy();
  }
  e->spec = {{"kind", "components"}, {"g11", g11.str()}, {"g12", g12.str()}, {"g22", g22.str()}};
  MetricModel m;
  m.exprs_ = e;
  m.tag_ = tag.value_or(kinks ? Regularity::kC11 : Regularity::kSmooth);
  if (tag) e->spec["regularity"] = to_string(*tag);
  return m;
}

MetricModel MetricModel::from_samples(const PeriodicGridField& g, Regularity tag) {
  if (g.rank() != Rank::kMatrix) throw Error(ErrorCode::kInvalidArgument, "metric samples must be matrix-ranked");
  MetricModel m;
  m.tag_ = tag;
  m.n_ = g.resolution();
  m.g_ = g;
  for (int a = 0; a < 2; ++a) m.dg_[a] = finite_diff(g, a == 0 ? Axis::kX : Axis::kY);
  if (!g.all_finite()) throw Error(ErrorCode::kDomain, "metric samples are not finite");
  if (g.symmetry_defect() > 0.0) throw Error(ErrorCode::kNotSpd, "metric samples are not symmetric");
  return m;
}

MetricModel MetricModel::from_json(const nlohmann::json& spec) {
  if (!spec.is_object()) throw Error(ErrorCode::kSchema, "metric spec must be an object");
  std::optional<Regularity> tag;
  if (spec.contains("regularity")) tag = regularity_from_string(spec.at("regularity").get<std::string>());
  const std::string kind = spec.value("kind", "");
  auto text = [&](const char* key) {
    if (!spec.contains(key) || !spec.at(key).is_string())
      throw Error(ErrorCode::kSchema, std::string("metric spec needs string field '") + key + "'");
    return parse_field(spec.at(key).get<std::string>());
  };
  if (kind == "conformal") return conformal(text("u"), tag);
  if (kind == "components") return components(text("g11"), text("g12"), text("g22"), tag);
  if (kind == "flat") return flat();
  throw Error(ErrorCode::kSchema, "metric kind must be 'flat', 'conformal' or 'components'");
}

nlohmann::json MetricModel::to_json() const {
  nlohmann::json j = exprs_ ? exprs_->spec : nlohmann::json{{"kind", "samples"}};
  j["regularity_inferred"] = to_string(tag_);
  return j;
}

bool MetricModel::is_conformal() const { return exprs_ && exprs_->conformal; }

const FieldExpr& MetricModel::conformal_factor() const {
  if (!is_conformal()) throw Error(ErrorCode::kInvalidArgument, "metric is not conformal");
  return exprs_->u;
}

bool MetricModel::is_flat() const {
  if (!exprs_) {
    for (const auto& d : dg_)
      if (d.sup_norm() != 0.0) return false;
    return true;
  }
  if (exprs_->conformal) return exprs_->u.is_constant();
  for (int c = 0; c < 3; ++c)
    if (!exprs_->g[c].is_constant()) return false;
  return true;
}

std::string MetricModel::description() const {
  if (!exprs_) return "sampled metric";
  if (exprs_->conformal) return "exp(2u) identity, u = " + exprs_->u.str();
  return "g11 = " + exprs_->g[0].str() + ", g12 = " + exprs_->g[1].str() + ", g22 = " + exprs_->g[2].str();
}

LocalGeometry MetricModel::geometry_at(const Vec2& p, int order) const {
  if (!exprs_) throw Error(ErrorCode::kUnsupported, "metric has no expressions");
  const Expressions& e = *exprs_;
  LocalGeometry out;
  const double x = p.x(), y = p.y();
  if (e.conformal) {
    const double w = std::exp(2.0 * e.u(x, y));
    out.g = w * Mat2::Identity();
    if (order >= 1) {
      const double ux = e.du[0](x, y), uy = e.du[1](x, y);
      out.dg[0] = 2.0 * w * ux * Mat2::Identity();
      out.dg[1] = 2.0 * w * uy * Mat2::Identity();
      if (order >= 2) {
        const double du[2] = {ux, uy};
        const int ia[3] = {0, 0, 1}, ib[3] = {0, 1, 1};
        for (int s = 0; s < 3; ++s)
          out.d2g[s] = w * (4.0 * du[ia[s]] * du[ib[s]] + 2.0 * e.d2u[s](x, y)) * Mat2::Identity();
      }
    }
    return out;
  }
  out.g = sym(e.g[0](x, y), e.g[1](x, y), e.g[2](x, y));
  if (order >= 1)
    for (int a = 0; a < 2; ++a) out.dg[a] = sym(e.dg[a][0](x, y), e.dg[a][1](x, y), e.dg[a][2](x, y));
  if (order >= 2)
    for (int s = 0; s < 3; ++s) out.d2g[s] = sym(e.d2g[s][0](x, y), e.d2g[s][1](x, y), e.d2g[s][2](x, y));
  return out;
}

MetricModel MetricModel::sampled(int n, double det_floor) const {
  if (n < 16) throw Error(ErrorCode::kInvalidArgument, "metric sampling requires N >= 16");
  MetricModel m = *this;
  if (!exprs_) {
    if (n != n_) throw Error(ErrorCode::kUnsupported, "sampled metric cannot be resampled");
  } else {
    m.n_ = n;
    const double h = 1.0 / n;
    const bool second = tag_ != Regularity::kC1;
    m.g_ = PeriodicGridField(n, Rank::kMatrix);
    for (auto& d : m.dg_) d = PeriodicGridField(n, Rank::kMatrix);
    for (auto& d : m.d2g_) d = second ? PeriodicGridField(n, Rank::kMatrix) : PeriodicGridField();
    m.has_d2g_ = second;
    parallel_for(n, [&](std::ptrdiff_t jj) {
      const int j = static_cast<int>(jj);
      for (int i = 0; i < n; ++i) {
        const LocalGeometry geo = geometry_at(Vec2(i * h, j * h), second ? 2 : 1);
        m.g_.set_matrix(i, j, geo.g);
        for (int a = 0; a < 2; ++a) m.dg_[a].set_matrix(i, j, geo.dg[a]);
        if (second)
          for (int s = 0; s < 3; ++s) m.d2g_[s].set_matrix(i, j, geo.d2g[s]);
      }
    });
  }
  if (!m.g_.all_finite() || !m.dg_[0].all_finite() || !m.dg_[1].all_finite())
    throw Error(ErrorCode::kDomain, "metric samples are not finite");
  std::ostringstream bad;
  int count = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Mat2 g = m.g_.matrix(i, j);
      if (!(g(0, 0) > 0.0) || !(g.determinant() >= det_floor)) {
        if (count < 8) bad << " (" << i << "," << j << ")";
        ++count;
      }
    }
  if (count > 0) {
    throw SpdError("metric not positive definite above the determinant floor at " +
                       std::to_string(count) + " node(s):" + bad.str(),
                   0.0);
  }
  return m;
}

void MetricModel::require_sampled() const {
  if (!is_sampled()) throw Error(ErrorCode::kInvalidArgument, "metric has not been sampled");
}

LocalGeometry MetricModel::geometry_at_node(int i, int j) const {
  require_sampled();
  LocalGeometry out;
  out.g = g_.matrix(i, j);
  for (int a = 0; a < 2; ++a) out.dg[a] = dg_[a].matrix(i, j);
  if (has_d2g_)
    for (int s = 0; s < 3; ++s) out.d2g[s] = d2g_[s].matrix(i, j);
  return out;
}

double MetricModel::min_det() const {
  require_sampled();
  double m = INFINITY;
  for (int j = 0; j < n_; ++j)
    for (int i = 0; i < n_; ++i) m = std::min(m, g_.matrix(i, j).determinant());
  return m;
}

LocalGeometry SmoothedMetric::at_node(int i, int j) const {
  LocalGeometry out;
  out.g = g.matrix(i, j);
  for (int a = 0; a < 2; ++a) out.dg[a] = dg[a].matrix(i, j);
  for (int s = 0; s < 3; ++s) out.d2g[s] = d2g[s].matrix(i, j);
  return out;
}

double SmoothedMetric::inverse_defect() const {
  double worst = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, (ginv.matrix(i, j) * g.matrix(i, j) - Mat2::Identity()).cwiseAbs().maxCoeff());
  return worst;
}

namespace {

bool spd_everywhere(const PeriodicGridField& g) {
  const int n = g.resolution();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Mat2 m = g.matrix(i, j);
      if (!(m(0, 0) > 0.0) || !(m.determinant() > 0.0)) return false;
    }
  return true;
}

}  // namespace

SmoothedMetric smooth(const MetricModel& model, double eps) {
  if (!model.is_sampled()) throw Error(ErrorCode::kInvalidArgument, "metric has not been sampled");
  const int n = model.resolution();
  const Kernel k = Kernel::bump(eps, n);
  SmoothedMetric s;
  s.eps = eps;
  s.n = n;
  s.g = convolve_symmetric(model.g(), k);
  if (!spd_everywhere(s.g)) {
    double eps_max = 0.0;
    for (double e = eps / 2; e * n >= 1.0; e /= 2) {
      if (spd_everywhere(convolve_symmetric(model.g(), Kernel::bump(e, n)))) {
        eps_max = e;
        break;
      }
    }
    throw SpdError("smoothed metric is not positive definite at eps = " + format_double(eps), eps_max);
  }
  const bool symbolic_first = model.has_expressions();
  for (int a = 0; a < 2; ++a) {
    if (symbolic_first) {
      s.dg[a] = convolve_symmetric(model.dg()[a], k);
    } else {
      s.dg[a] = convolve_symmetric(model.g(), Kernel::bump(eps, n, a == 0 ? KernelDerivative::kX : KernelDerivative::kY));
    }
  }
  if (model.has_second_derivatives()) {
    s.second_derivative_source = "symbolic";
    for (int t = 0; t < 3; ++t) s.d2g[t] = convolve_symmetric(model.d2g()[t], k);
  } else {
    s.second_derivative_source = "kernel";
    const Kernel kx = Kernel::bump(eps, n, KernelDerivative::kX);
    const Kernel ky = Kernel::bump(eps, n, KernelDerivative::kY);
    if (symbolic_first) {
      s.d2g[0] = convolve_symmetric(model.dg()[0], kx);
      s.d2g[1] = convolve_symmetric(model.dg()[0], ky);
      s.d2g[2] = convolve_symmetric(model.dg()[1], ky);
    } else {
      s.d2g[0] = convolve_symmetric(model.g(), Kernel::bump(eps, n, KernelDerivative::kXX));
      s.d2g[1] = convolve_symmetric(model.g(), Kernel::bump(eps, n, KernelDerivative::kXY));
      s.d2g[2] = convolve_symmetric(model.g(), Kernel::bump(eps, n, KernelDerivative::kYY));
    }
  }
  s.ginv = matrix_field(n, [&](int i, int j) { return Mat2(s.g.matrix(i, j).inverse()); });
  return s;
}

double equivalence_delta(const PeriodicGridField& g, const PeriodicGridField& g_eps) {
  const int n = g.resolution();
  double delta = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const GeneralizedEigen ev = generalized_eigen(g_eps.matrix(i, j), g.matrix(i, j));
      delta = std::max({delta, std::abs(ev.lambda_min - 1.0), std::abs(ev.lambda_max - 1.0)});
    }
  return delta;
}

PeriodicGridField volume_density(const PeriodicGridField& g) {
  const int n = g.resolution();
  PeriodicGridField out(n, Rank::kScalar);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) out(i, j) = std::sqrt(g.matrix(i, j).determinant());
  return out;
}

double volume(const PeriodicGridField& g) { return integrate(volume_density(g)); }

}  // namespace curvlab
