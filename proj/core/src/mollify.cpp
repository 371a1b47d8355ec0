#include "curvlab/mollify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "curvlab/error.hpp"
#include "curvlab/io.hpp"

namespace curvlab {

bool sequence_converges(const std::vector<double>& v, double ratio, int inversions) {
  if (v.empty()) return true;
  // identically zero up to rounding
  if (*std::max_element(v.begin(), v.end()) <= 1e-12) return true;
  int ups = 0;
  for (std::size_t s = 1; s < v.size(); ++s)
    if (v[s] > v[s - 1]) ++ups;
  return ups <= inversions && v.back() <= ratio * v.front();
}

namespace {

std::vector<std::vector<double>> sequences(const CommutatorReport& r) {
  std::vector<std::vector<double>> out{r.c0};
  for (const auto* col : {&r.c1, &r.c2}) {
    std::vector<double> s;
    for (const auto& v : *col)
      if (v) s.push_back(*v);
    if (!s.empty()) out.push_back(s);
  }
  return out;
}

double sup_abs(const PeriodicGridField& f) { return f.sup_norm(); }

PeriodicGridField symmetric_convolve(const PeriodicGridField& m, const Kernel& k) {
  PeriodicGridField out = convolve(m, k);
  // keep exact symmetry of the off-diagonal entries
  const auto a = out.component(1);
  auto b = out.component(2);
  std::copy(a.begin(), a.end(), b.begin());
  return out;
}

void require_pairing_model(const MetricModel& model) {
  if (!model.is_sampled()) throw Error(ErrorCode::kInvalidArgument, "metric has not been sampled");
  if (model.regularity() == Regularity::kC1 || !model.has_second_derivatives())
    throw Error(ErrorCode::kUnsupported, "commutators with Ric(g) need a smooth or C11 model");
}

struct VectorJet {
  Vec2 v;
  std::array<Vec2, 2> d;
  std::array<Vec2, 3> dd;
};

// Samples of a vector expression and its first and second derivatives.
class VectorJetField {
 public:
  VectorJetField(const VectorExpr& x, int n) : n_(n) {
    for (int c = 0; c < 2; ++c) {
      x[c].check_periodic();
      const FieldExpr dx = x[c].dx(), dy = x[c].dy();
      const FieldExpr parts[6] = {x[c], dx, dy, dx.dx(), dx.dy(), dy.dy()};
      for (int p = 0; p < 6; ++p) samples_[c][p] = parts[p].sample(n);
    }
  }
  VectorJet at(int i, int j) const {
    VectorJet jet;
    for (int c = 0; c < 2; ++c) {
      jet.v(c) = samples_[c][0](i, j);
      jet.d[0](c) = samples_[c][1](i, j);
      jet.d[1](c) = samples_[c][2](i, j);
      for (int s = 0; s < 3; ++s) jet.dd[s](c) = samples_[c][3 + s](i, j);
    }
    return jet;
  }
  int resolution() const { return n_; }

 private:
  int n_;
  PeriodicGridField samples_[2][6];
};

double form(const Mat2& g, const Vec2& x, const Vec2& y) { return x.dot(g * y); }

// Value, gradient and Hessian (xx, xy, yy) of g(X, Y) by the product rule.
std::array<double, 6> pairing_jet(const LocalGeometry& geo, const VectorJet& x, const VectorJet& y) {
  std::array<double, 6> out{};
  out[0] = form(geo.g, x.v, y.v);
  for (int a = 0; a < 2; ++a)
    out[1 + a] = form(geo.dg[a], x.v, y.v) + form(geo.g, x.d[a], y.v) + form(geo.g, x.v, y.d[a]);
  const int ia[3] = {0, 0, 1}, ib[3] = {0, 1, 1};
  for (int s = 0; s < 3; ++s) {
    const int a = ia[s], b = ib[s];
    out[3 + s] = form(geo.d2g[s], x.v, y.v) + form(geo.g, x.dd[s], y.v) + form(geo.g, x.v, y.dd[s]) +
                 form(geo.dg[a], x.d[b], y.v) + form(geo.dg[b], x.d[a], y.v) + form(geo.dg[a], x.v, y.d[b]) +
                 form(geo.dg[b], x.v, y.d[a]) + form(geo.g, x.d[a], y.d[b]) + form(geo.g, x.d[b], y.d[a]);
  }
  return out;
}

}  // namespace

bool CommutatorReport::converges(double ratio, int inversions) const {
  for (const auto& s : sequences(*this))
    if (!sequence_converges(s, ratio, inversions)) return false;
  return true;
}

bool CommutatorReport::decreasing(int inversions) const {
  for (const auto& s : sequences(*this))
    if (!sequence_converges(s, INFINITY, inversions)) return false;
  return true;
}

std::string to_csv(const CommutatorReport& r) {
  std::ostringstream out;
  out << "eps,norm_C0,norm_C1,norm_C2\n";
  for (std::size_t s = 0; s < r.eps.size(); ++s) {
    out << format_double(r.eps[s]) << ',' << format_double(r.c0[s]) << ',';
    if (s < r.c1.size() && r.c1[s]) out << format_double(*r.c1[s]);
    out << ',';
    if (s < r.c2.size() && r.c2[s]) out << format_double(*r.c2[s]);
    out << '\n';
  }
  return out.str();
}

CommutatorReport friedrichs_norms(const FieldExpr& a, const FieldExpr& f, const std::vector<double>& eps_list,
                                  int n) {
  a.check_periodic();
  f.check_periodic();
  CommutatorReport r;
  r.quantity = "friedrichs";
  r.expression = "(a*rho_eps)(f*rho_eps) - (a f)*rho_eps with a = " + a.str() + ", f = " + f.str();
  const PeriodicGridField sa = a.sample(n), sf = f.sample(n);
  const PeriodicGridField saf = multiply(sa, sf);
  for (double eps : eps_list) {
    const Kernel k = Kernel::bump(eps, n);
    const PeriodicGridField ae = convolve(sa, k), fe = convolve(sf, k);
    const PeriodicGridField c = multiply(ae, fe) - convolve(saf, k);
    double c1 = 0.0;
    for (KernelDerivative d : {KernelDerivative::kX, KernelDerivative::kY}) {
      const Kernel kd = Kernel::bump(eps, n, d);
      const PeriodicGridField dc =
          multiply(convolve(sa, kd), fe) + multiply(ae, convolve(sf, kd)) - convolve(saf, kd);
      c1 = std::max(c1, sup_abs(dc));
    }
    r.eps.push_back(eps);
    r.c0.push_back(sup_abs(c));
    r.c1.push_back(c1);
    r.c2.push_back(std::nullopt);
  }
  return r;
}

CommutatorReport ricci_commutator_norms(const MetricModel& model, const std::vector<double>& eps_list) {
  require_pairing_model(model);
  CommutatorReport r;
  r.quantity = "ricci";
  r.expression = "Ric(g_eps) - Ric(g)*rho_eps, componentwise, g: " + model.description();
  const CurvatureFields direct = riemann_ricci(model);
  for (double eps : eps_list) {
    const CurvatureFields smoothed = riemann_ricci(smooth(model, eps));
    const PeriodicGridField diff = smoothed.ric - symmetric_convolve(direct.ric, Kernel::bump(eps, model.resolution()));
    r.eps.push_back(eps);
    r.c0.push_back(sup_abs(diff));
    r.c1.push_back(std::nullopt);
    r.c2.push_back(std::nullopt);
  }
  return r;
}

PairingCommutators pairing_commutator_norms(const MetricModel& model, const VectorExpr& x, const VectorExpr& y,
                                            const std::vector<double>& eps_list) {
  require_pairing_model(model);
  const int n = model.resolution();
  const VectorJetField jx(x, n), jy(y, n);
  const CurvatureFields direct = riemann_ricci(model);

  // Ric_g(X, Y) and the jet of g(X, Y) from the a.e. derivatives.
  PeriodicGridField ric_xy(n, Rank::kScalar);
  std::array<PeriodicGridField, 6> g_xy;
  for (auto& f : g_xy) f = PeriodicGridField(n, Rank::kScalar);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const VectorJet a = jx.at(i, j), b = jy.at(i, j);
      ric_xy(i, j) = form(direct.ric.matrix(i, j), a.v, b.v);
      const auto jet = pairing_jet(model.geometry_at_node(i, j), a, b);
      for (int c = 0; c < 6; ++c) g_xy[c](i, j) = jet[c];
    }

  PairingCommutators out;
  const std::string xs = "X = (" + x[0].str() + ", " + x[1].str() + "), Y = (" + y[0].str() + ", " + y[1].str() + ")";
  out.ricci.quantity = "pairing-ricci";
  out.ricci.expression = "Ric_g(X,Y)*rho_eps - Ric_{g_eps}(X,Y), " + xs;
  out.metric.quantity = "pairing-metric";
  out.metric.expression = "g(X,Y)*rho_eps - g_eps(X,Y) with exact first and second derivatives, " + xs;
  for (double eps : eps_list) {
    const Kernel k = Kernel::bump(eps, n);
    const SmoothedMetric sm = smooth(model, eps);
    const CurvatureFields smoothed = riemann_ricci(sm);
    const PeriodicGridField ric_conv = convolve(ric_xy, k);
    std::array<PeriodicGridField, 6> g_conv;
    for (int c = 0; c < 6; ++c) g_conv[c] = convolve(g_xy[c], k);
    double n_ric = 0.0, n0 = 0.0, n1 = 0.0, n2 = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const VectorJet a = jx.at(i, j), b = jy.at(i, j);
        n_ric = std::max(n_ric, std::abs(ric_conv(i, j) - form(smoothed.ric.matrix(i, j), a.v, b.v)));
        const auto jet = pairing_jet(sm.at_node(i, j), a, b);
        n0 = std::max(n0, std::abs(g_conv[0](i, j) - jet[0]));
        for (int c = 1; c < 3; ++c) n1 = std::max(n1, std::abs(g_conv[c](i, j) - jet[c]));
        for (int c = 3; c < 6; ++c) n2 = std::max(n2, std::abs(g_conv[c](i, j) - jet[c]));
      }
    out.ricci.eps.push_back(eps);
    out.ricci.c0.push_back(n_ric);
    out.ricci.c1.push_back(std::nullopt);
    out.ricci.c2.push_back(std::nullopt);
    out.metric.eps.push_back(eps);
    out.metric.c0.push_back(n0);
    out.metric.c1.push_back(n1);
    out.metric.c2.push_back(n2);
  }
  return out;
}

CommutatorReport inverse_deviation(const MetricModel& model, const std::vector<double>& eps_list) {
  if (!model.is_sampled()) throw Error(ErrorCode::kInvalidArgument, "metric has not been sampled");
  CommutatorReport r;
  r.quantity = "inverse";
  r.expression = "g_eps^-1 - g^-1, g: " + model.description();
  const int n = model.resolution();
  for (double eps : eps_list) {
    const SmoothedMetric sm = smooth(model, eps);
    double worst = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        worst = std::max(worst, (sm.ginv.matrix(i, j) - model.g().matrix(i, j).inverse()).cwiseAbs().maxCoeff());
    r.eps.push_back(eps);
    r.c0.push_back(worst);
    r.c1.push_back(std::nullopt);
    r.c2.push_back(std::nullopt);
  }
  return r;
}

}  // namespace curvlab
