#include "scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Core>

#include "curvlab/curvature.hpp"
#include "curvlab/entropy.hpp"
#include "curvlab/error.hpp"
#include "curvlab/geodesic.hpp"
#include "curvlab/io.hpp"
#include "curvlab/metric_field.hpp"
#include "curvlab/mollify.hpp"
#include "curvlab/parallel.hpp"
#include "curvlab/riccati.hpp"
#include "curvlab/transport.hpp"

#ifndef CURVLAB_VERSION
#define CURVLAB_VERSION "0.0.0"
#endif

namespace curvlab::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void schema(const std::string& msg) { throw Error(ErrorCode::kSchema, msg); }

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) schema(where + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) schema("unknown field '" + key + "' in " + where);
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) schema(what + " must be a number");
  return j.get<double>();
}

double number_or(const json& obj, const char* key, double def) {
  return obj.contains(key) ? number(obj.at(key), key) : def;
}

int integer_or(const json& obj, const char* key, int def) {
  if (!obj.contains(key)) return def;
  if (!obj.at(key).is_number_integer()) schema(std::string(key) + " must be an integer");
  return obj.at(key).get<int>();
}

std::string string_or(const json& obj, const char* key, const std::string& def) {
  if (!obj.contains(key)) return def;
  if (!obj.at(key).is_string()) schema(std::string(key) + " must be a string");
  return obj.at(key).get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& what) {
  if (!j.is_array()) schema(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : j) out.push_back(number(x, what));
  return out;
}

std::vector<double> numbers_or(const json& obj, const char* key, std::vector<double> def) {
  return obj.contains(key) ? numbers(obj.at(key), key) : def;
}

Vec2 vec2(const json& j, const std::string& what) {
  const auto v = numbers(j, what);
  if (v.size() != 2) schema(what + " must have two entries");
  return {v[0], v[1]};
}

Mat2 mat2(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) schema(what + " must be a 2x2 array");
  Mat2 m;
  for (int r = 0; r < 2; ++r) {
    const Vec2 row = vec2(j[r], what);
    m(r, 0) = row(0);
    m(r, 1) = row(1);
  }
  return m;
}

struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  double uniform() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
};

std::string fmt(double v) { return format_double(v); }

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) {
    for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << header[k];
    out_ << '\n';
  }
  template <typename... T>
  void row(const T&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  std::ostringstream out_;
};

struct Artifact {
  std::string name;
  std::string quantity;
  std::string content;
};

struct KindResult {
  bool verdict = false;
  std::string summary;
  json report;
  std::vector<Artifact> files;
};

std::unique_ptr<MetricField> make_field(const Scenario& s, const json& params) {
  if (!params.contains("field") || params.at("field") == "analytic")
    return std::make_unique<AnalyticMetricField>(s.model);
  const json& f = params.at("field");
  if (f.is_object() && f.contains("smoothed")) {
    check_keys(f, {"smoothed"}, "field");
    const double eps = number(f.at("smoothed"), "field.smoothed");
    return std::make_unique<GridMetricField>(smooth(s.model.sampled(s.n), eps));
  }
  schema("field must be \"analytic\" or {\"smoothed\": eps}");
}

std::string field_name(const json& params) {
  if (!params.contains("field") || params.at("field") == "analytic") return "analytic";
  return "smoothed eps=" + fmt(params.at("field").at("smoothed").get<double>());
}

struct GaussExtreme {
  double value;
  Vec2 where;
};

GaussExtreme gauss_min(const Scenario& s) {
  const CurvatureFields f = riemann_ricci(s.model.sampled(s.n));
  GaussExtreme e{f.gauss(0, 0), Vec2::Zero()};
  for (int j = 0; j < s.n; ++j)
    for (int i = 0; i < s.n; ++i) {
      const double v = f.gauss(i, j);
      if (v < e.value) e = {v, Vec2(static_cast<double>(i) / s.n, static_cast<double>(j) / s.n)};
    }
  return e;
}

double resolve_k(const Scenario& s, json& report) {
  if (s.k.is_number()) {
    report["k_source"] = "given";
    return s.k.get<double>() + s.k_offset;
  }
  const GaussExtreme e = gauss_min(s);
  report["k_source"] = "gauss-min";
  report["gauss_min"] = e.value;
  report["gauss_argmin"] = {e.where.x(), e.where.y()};
  report["k_offset"] = s.k_offset;
  return e.value + s.k_offset;
}

PotentialPtr make_potential(const json& j, const MetricField& field) {
  const std::string kind = string_or(j, "kind", "");
  if (kind == "expr") {
    check_keys(j, {"kind", "phi"}, "potential");
    return std::make_shared<ExprPotential>(parse_field(string_or(j, "phi", "0")));
  }
  if (kind == "quadratic") {
    check_keys(j, {"kind", "center", "b", "A", "r_plateau"}, "potential");
    const Vec2 c = vec2(j.at("center"), "potential.center");
    const Vec2 b = j.contains("b") ? vec2(j.at("b"), "potential.b") : Vec2::Zero();
    const Mat2 a = j.contains("A") ? mat2(j.at("A"), "potential.A") : Mat2::Zero();
    return std::make_shared<LocalQuadraticPotential>(c, b, a, number_or(j, "r_plateau", 0.3));
  }
  if (kind == "witness") {
    check_keys(j, {"kind", "x_star", "v", "r_plateau", "hessian", "transverse_hessian"}, "potential");
    const Vec2 xs = vec2(j.at("x_star"), "potential.x_star");
    const Vec2 v = vec2(j.at("v"), "potential.v");
    Mat2 h = j.contains("hessian") ? mat2(j.at("hessian"), "potential.hessian") : Mat2::Zero();
    if (j.contains("transverse_hessian")) {
      // s (g n)(g n)^T with n the unit normal to v
      const Mat2 g = field.at(xs, 0).g;
      const Vec2 gv = g * v;
      Vec2 nrm(-gv.y(), gv.x());
      nrm /= std::sqrt(nrm.dot(g * nrm));
      const Vec2 gn = g * nrm;
      h += number(j.at("transverse_hessian"), "transverse_hessian") * gn * gn.transpose();
    }
    return std::make_shared<LocalQuadraticPotential>(
        build_witness_potential(field, xs, v, number_or(j, "r_plateau", 0.2), h));
  }
  schema("potential kind must be 'expr', 'quadratic' or 'witness'");
}

std::string commutator_csv(const CommutatorReport& r) { return to_csv(r); }

json commutator_json(const CommutatorReport& r) {
  json j;
  j["quantity"] = r.quantity;
  j["expression"] = r.expression;
  j["eps"] = r.eps;
  j["c0"] = r.c0;
  std::vector<json> c1, c2;
  for (const auto& v : r.c1) c1.push_back(v ? json(*v) : json());
  for (const auto& v : r.c2) c2.push_back(v ? json(*v) : json());
  j["c1"] = c1;
  j["c2"] = c2;
  j["converges"] = r.converges();
  return j;
}

// ---------------------------------------------------------------- kinds

KindResult run_bound_check(const Scenario& s) {
  check_keys(s.params, {"path", "tail"}, "params");
  KindResult out;
  const double k = resolve_k(s, out.report);
  const MetricModel model = s.model.sampled(s.n);
  const std::string path = string_or(s.params, "path", "smoothed");
  const int tail = integer_or(s.params, "tail", 3);
  BoundReport rep;
  if (path == "smoothed") {
    rep = bound_check(model, k, s.delta, s.eps, tail);
  } else if (path == "direct") {
    rep = bound_check({riemann_ricci(model)}, {0.0}, k, s.delta, 1);
  } else {
    schema("params.path must be 'smoothed' or 'direct'");
  }
  json r = to_json(rep);
  for (auto& [key, value] : out.report.items()) r[key] = value;
  r["path"] = path;
  out.report = r;
  Csv csv({"eps", "k_eff", "i", "j", "x", "y", "v0", "v1"});
  for (const auto& e : rep.entries)
    csv.row(e.eps, e.k_eff, e.i, e.j, static_cast<double>(e.i) / s.n, static_cast<double>(e.j) / s.n, e.vector(0),
            e.vector(1));
  out.files.push_back({"keff.csv", "per-eps minimum over nodes of the smallest eigenvalue of Ric(g_eps) against g_eps",
                       csv.str()});
  out.verdict = std::all_of(rep.verdicts.begin(), rep.verdicts.end(), [](const auto& v) { return v.holds; });
  std::ostringstream sum;
  sum << "K=" << fmt(k);
  for (const auto& v : rep.verdicts) {
    sum << "; delta " << fmt(v.delta) << (v.holds ? " holds" : " fails");
    if (v.eps0) sum << " (eps0 " << fmt(*v.eps0) << ")";
    if (v.witness)
      sum << " (witness node " << v.witness->i << "," << v.witness->j << " K_eff " << fmt(v.witness->k_eff) << ")";
  }
  out.summary = sum.str();
  return out;
}

KindResult run_friedrichs(const Scenario& s) {
  check_keys(s.params, {"a", "f"}, "params");
  KindResult out;
  const FieldExpr a = parse_field(string_or(s.params, "a", "1"));
  const FieldExpr f = parse_field(string_or(s.params, "f", "0"));
  const CommutatorReport r = friedrichs_norms(a, f, s.eps, s.n);
  out.report = commutator_json(r);
  out.files.push_back({"friedrichs.csv", r.expression, commutator_csv(r)});
  out.verdict = r.converges();
  out.summary = "Friedrichs commutator " + std::string(out.verdict ? "converges" : "does not converge");
  return out;
}

KindResult run_commutators(const Scenario& s) {
  check_keys(s.params, {"X", "Y", "a", "f"}, "params");
  KindResult out;
  const MetricModel model = s.model.sampled(s.n);
  std::vector<std::pair<std::string, CommutatorReport>> reports;
  reports.emplace_back("ricci_commutator", ricci_commutator_norms(model, s.eps));
  auto vexpr = [&](const char* key, const char* d0, const char* d1) {
    if (!s.params.contains(key)) return VectorExpr{parse_field(d0), parse_field(d1)};
    const json& j = s.params.at(key);
    if (!j.is_array() || j.size() != 2 || !j[0].is_string() || !j[1].is_string())
      schema(std::string("params.") + key + " must be two expression strings");
    return VectorExpr{parse_field(j[0].get<std::string>()), parse_field(j[1].get<std::string>())};
  };
  const PairingCommutators pc =
      pairing_commutator_norms(model, vexpr("X", "1", "0"), vexpr("Y", "0", "1"), s.eps);
  reports.emplace_back("pairing_ricci", pc.ricci);
  reports.emplace_back("pairing_metric", pc.metric);
  if (s.params.contains("a") || s.params.contains("f"))
    reports.emplace_back("friedrichs", friedrichs_norms(parse_field(string_or(s.params, "a", "1")),
                                                        parse_field(string_or(s.params, "f", "0")), s.eps, s.n));
  const CommutatorReport inv = inverse_deviation(model, s.eps);
  out.verdict = true;
  std::ostringstream sum;
  for (const auto& [name, r] : reports) {
    out.report[name] = commutator_json(r);
    out.files.push_back({name + ".csv", r.expression, commutator_csv(r)});
    out.verdict = out.verdict && r.converges();
    sum << name << (r.converges() ? " ok; " : " FAILS; ");
  }
  out.report["inverse_deviation"] = commutator_json(inv);
  out.files.push_back({"inverse_deviation.csv", inv.expression, commutator_csv(inv)});
  out.summary = sum.str();
  return out;
}

KindResult run_geodesic(const Scenario& s) {
  check_keys(s.params, {"y", "w", "steps", "t_end", "field", "drift_tolerance"}, "params");
  KindResult out;
  const auto field = make_field(s, s.params);
  GeodesicOptions opt;
  opt.steps = integer_or(s.params, "steps", 256);
  opt.frame = true;
  const Vec2 y = vec2(s.params.at("y"), "params.y");
  const Vec2 w = vec2(s.params.at("w"), "params.w");
  const GeodesicSolution sol = integrate_geodesic(*field, y, w, opt, number_or(s.params, "t_end", 1.0));
  Csv csv({"t", "x", "y", "vx", "vy", "j00", "j01", "j10", "j11", "energy"});
  for (std::size_t k = 0; k < sol.t.size(); ++k) {
    const Mat2 j = sol.jacobian(k);
    csv.row(sol.t[k], sol.x[k](0), sol.x[k](1), sol.v[k](0), sol.v[k](1), j(0, 0), j(0, 1), j(1, 0), j(1, 1),
            sol.v[k].dot(field->at(sol.x[k], 0).g * sol.v[k]));
  }
  out.files.push_back({"geodesic.csv", "geodesic positions, velocities, position Jacobian dx/dy and g(v,v)",
                       csv.str()});
  const double drift = sol.energy_drift(*field);
  out.report = {{"field", field_name(s.params)},
                {"energy_drift", drift},
                {"end", {sol.x.back()(0), sol.x.back()(1)}},
                {"steps", opt.steps}};
  out.verdict = drift <= number_or(s.params, "drift_tolerance", 1e-8);
  out.summary = "energy drift " + fmt(drift);
  return out;
}

std::vector<Vec2> points_param(const Scenario& s, const char* key, int def_count) {
  std::vector<Vec2> pts;
  if (s.params.contains(key)) {
    const json& j = s.params.at(key);
    if (!j.is_array()) schema(std::string("params.") + key + " must be an array");
    for (const auto& p : j) pts.push_back(vec2(p, key));
    return pts;
  }
  Rng rng(s.seed);
  const int count = integer_or(s.params, "count", def_count);
  for (int k = 0; k < count; ++k) {
    const double x = rng.uniform();
    pts.emplace_back(x, rng.uniform());
  }
  return pts;
}

KindResult run_distance_matrix(const Scenario& s) {
  check_keys(s.params, {"points", "count", "steps", "field"}, "params");
  KindResult out;
  const auto field = make_field(s, s.params);
  const auto pts = points_param(s, "points", 8);
  LogMapOptions lo;
  lo.steps = integer_or(s.params, "steps", 256);
  const std::size_t m = pts.size();
  Eigen::MatrixXd d(m, m);
  std::vector<char> fb(m * m, 0);
  parallel_for(static_cast<std::ptrdiff_t>(m), [&](std::ptrdiff_t i) {
    for (std::size_t j = 0; j < m; ++j) {
      const DistanceResult r = distance_detail(*field, pts[i], pts[j], lo);
      d(i, j) = r.value;
      fb[i * m + j] = r.fallback;
    }
  });
  Csv csv({"i", "j", "distance", "fallback"});
  double asym = 0.0, tri = 0.0;
  int fallbacks = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      csv.row(i, j, d(i, j), static_cast<int>(fb[i * m + j]));
      fallbacks += fb[i * m + j];
      asym = std::max(asym, std::abs(d(i, j) - d(j, i)));
      for (std::size_t k = 0; k < m; ++k) tri = std::max(tri, d(i, k) - d(i, j) - d(j, k));
    }
  out.files.push_back({"distances.csv", "Riemannian distance between support points (shooting over winding classes)",
                       csv.str()});
  out.report = {{"field", field_name(s.params)},
                {"points", m},
                {"max_asymmetry", asym},
                {"max_triangle_violation", tri},
                {"fallbacks", fallbacks}};
  out.verdict = asym <= 1e-8 && tri <= 1e-6;
  out.summary = "asymmetry " + fmt(asym) + ", triangle " + fmt(tri);
  return out;
}

std::vector<double> random_weights(Rng& rng, std::size_t m) {
  std::vector<double> w(m);
  double s = 0.0;
  for (double& x : w) s += (x = 0.1 + rng.uniform());
  for (double& x : w) x /= s;
  return w;
}

KindResult run_ot(const Scenario& s) {
  check_keys(s.params, {"count", "reg", "field", "steps"}, "params");
  KindResult out;
  const auto field = make_field(s, s.params);
  const int count = integer_or(s.params, "count", 50);
  Rng rng(s.seed);
  std::vector<Vec2> a_pts, b_pts;
  for (int k = 0; k < count; ++k) {
    const double x = rng.uniform();
    a_pts.emplace_back(x, rng.uniform());
  }
  for (int k = 0; k < count; ++k) {
    const double x = rng.uniform();
    b_pts.emplace_back(x, rng.uniform());
  }
  const auto a = random_weights(rng, count);
  const auto b = random_weights(rng, count);
  LogMapOptions lo;
  lo.steps = integer_or(s.params, "steps", 256);
  const Eigen::MatrixXd cost = cost_matrix(*field, a_pts, b_pts, lo);
  const ExactSolution ex = solve_exact(a, b, cost);
  double feas = 0.0;
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < count; ++j) feas = std::max(feas, ex.duals.psi[i] + ex.duals.psi_c[j] - cost(i, j));
  Csv plan({"i", "j", "weight"});
  for (const auto& e : ex.plan.entries) plan.row(e.i, e.j, e.weight);
  Csv duals({"index", "psi", "psi_c"});
  for (int i = 0; i < count; ++i) duals.row(i, ex.duals.psi[i], ex.duals.psi_c[i]);
  out.files.push_back({"plan.csv", "optimal coupling for the cost d^2/2 (sparse)", plan.str()});
  out.files.push_back({"duals.csv", "Kantorovich potential psi on the source and its c-transform on the target",
                       duals.str()});
  const double marg = ex.plan.marginal_error(a, b);
  out.report = {{"field", field_name(s.params)},  {"count", count},         {"cost", ex.plan.cost},
                {"dual_value", ex.duals.value},   {"gap", ex.gap},          {"marginal_error", marg},
                {"max_feasibility_excess", feas}, {"w2", std::sqrt(2.0 * ex.plan.cost)}};
  Csv sk({"reg", "cost", "marginal_error", "iterations", "converged"});
  for (double reg : numbers_or(s.params, "reg", {})) {
    const SinkhornSolution so = solve_sinkhorn(a, b, cost, reg);
    sk.row(reg, so.plan.cost, so.marginal_error, so.iterations, static_cast<int>(so.converged));
  }
  if (s.params.contains("reg"))
    out.files.push_back({"sinkhorn.csv", "entropically regularized transport cost per regularization", sk.str()});
  const double scale = 1.0 + cost.maxCoeff();
  out.verdict = ex.gap <= 1e-7 * scale && marg <= 1e-9 && feas <= 0.0;
  out.summary = "cost " + fmt(ex.plan.cost) + ", duality gap " + fmt(ex.gap);
  return out;
}

BumpMeasure bump_param(const Scenario& s, const MetricField& field) {
  const Vec2 c = vec2(s.params.at("center"), "params.center");
  return bump_measure(field, c, number_or(s.params, "radius", 0.05), s.n);
}

KindResult run_displacement(const Scenario& s) {
  check_keys(s.params, {"potential", "center", "radius", "t", "steps", "field", "solver_particles"}, "params");
  KindResult out;
  const auto field = make_field(s, s.params);
  const auto phi = make_potential(s.params.at("potential"), *field);
  const BumpMeasure mu0 = bump_param(s, *field);
  std::vector<double> t = numbers_or(s.params, "t", {0.0, 0.25, 0.5, 0.75, 1.0});
  const int steps = integer_or(s.params, "steps", 256);
  const DisplacementFamily fam = displacement_interpolation(*field, *phi, mu0, t, steps);
  for (std::size_t k = 0; k < t.size(); ++k) {
    Csv csv({"x", "y", "weight", "density"});
    for (std::size_t i = 0; i < fam.base.size(); ++i)
      csv.row(fam.position[k][i](0), fam.position[k][i](1), fam.weights[i], fam.density[k][i]);
    out.files.push_back({"measure_" + std::to_string(k) + ".csv",
                         "pushforward mu_t at t=" + fmt(t[k]) + ": support, weights, density against vol_g",
                         csv.str()});
  }
  // transport cross-check on a subsample of the support
  const int particles = integer_or(s.params, "solver_particles", 48);
  const std::size_t m = fam.base.size();
  const std::size_t stride = std::max<std::size_t>(1, (m + particles - 1) / particles);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < m; i += stride) idx.push_back(i);
  std::vector<double> w;
  double total = 0.0, constructed = 0.0;
  for (std::size_t i : idx) {
    w.push_back(fam.weights[i]);
    total += fam.weights[i];
    constructed += fam.weights[i] * fam.speed_sq[i];
  }
  for (double& x : w) x /= total;
  constructed /= total;
  LogMapOptions lo;
  lo.steps = 64;
  auto w2_between = [&](std::size_t ka, std::size_t kb) {
    std::vector<Vec2> pa, pb;
    for (std::size_t i : idx) {
      pa.push_back(fam.position[ka][i]);
      pb.push_back(fam.position[kb][i]);
    }
    return std::sqrt(std::max(0.0, 2.0 * solve_exact(w, w, cost_matrix(*field, pa, pb, lo)).plan.cost));
  };
  const std::size_t k0 = std::find(t.begin(), t.end(), 0.0) - t.begin();
  const std::size_t k1 = std::find(t.begin(), t.end(), 1.0) - t.begin();
  if (k0 == t.size() || k1 == t.size()) schema("params.t must contain 0 and 1");
  const double w01 = w2_between(k0, k1);
  Csv pairs({"s", "t", "w2", "expected", "relative_error"});
  double worst = 0.0;
  for (std::size_t a = 0; a < t.size(); ++a)
    for (std::size_t b = a + 1; b < t.size(); ++b) {
      const double wab = (a == k0 && b == k1) ? w01 : w2_between(a, b);
      const double expect = std::abs(t[b] - t[a]) * w01;
      const double rel = expect > 0.0 ? std::abs(wab - expect) / expect : std::abs(wab);
      worst = std::max(worst, rel);
      pairs.row(t[a], t[b], wab, expect, rel);
    }
  out.files.push_back({"w2_pairs.csv", "W2(mu_s, mu_t) from the exact solver against |t - s| W2(mu_0, mu_1)",
                       pairs.str()});
  const double identity_gap = std::abs(constructed - w01 * w01);
  double mass_err = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) mass_err = std::max(mass_err, std::abs(fam.mass(k) - 1.0));
  out.report = {{"field", field_name(s.params)},
                {"support_points", m},
                {"solver_points", idx.size()},
                {"potential", phi->describe()},
                {"w2_lagrangian", std::sqrt(fam.lagrangian_w2_sq())},
                {"w2_solver", w01},
                {"w2_sq_identity_gap", identity_gap},
                {"max_geodesic_relative_error", worst},
                {"mass_error", mass_err}};
  out.verdict = worst <= 1e-3 && identity_gap <= 1e-4 && mass_err <= 1e-6;
  out.summary = "geodesic rel. error " + fmt(worst) + ", W2^2 identity gap " + fmt(identity_gap);
  return out;
}

KindResult run_convexity(const Scenario& s) {
  check_keys(s.params,
             {"potential", "center", "radius", "t", "steps", "field", "entropy", "tolerance", "eulerian",
              "eulerian_refine", "solver_particles"},
             "params");
  KindResult out;
  json kinfo;
  const double k = resolve_k(s, kinfo);
  const auto field = make_field(s, s.params);
  const auto phi = make_potential(s.params.at("potential"), *field);
  const BumpMeasure mu0 = bump_param(s, *field);
  ConvexityOptions opt;
  opt.t = numbers_or(s.params, "t", opt.t);
  opt.steps = integer_or(s.params, "steps", opt.steps);
  opt.tolerance = number_or(s.params, "tolerance", opt.tolerance);
  opt.eulerian_refine = integer_or(s.params, "eulerian_refine", opt.eulerian_refine);
  opt.solver_particles = integer_or(s.params, "solver_particles", opt.solver_particles);
  if (s.params.contains("eulerian")) {
    if (!s.params.at("eulerian").is_boolean()) schema("params.eulerian must be a boolean");
    opt.eulerian = s.params.at("eulerian").get<bool>();
  }
  const EntropyFunction u = EntropyFunction::from_string(string_or(s.params, "entropy", "boltzmann"));
  const ConvexityReport rep = convexity_check(*field, *phi, mu0, k, u, opt);
  out.report = to_json(rep);
  for (auto& [key, value] : kinfo.items()) out.report[key] = value;
  out.report["k"] = k;
  out.report["entropy"] = u.name();
  out.report["field"] = field_name(s.params);
  out.report["potential"] = phi->describe();
  Csv csv({"t", "lhs", "rhs", "margin", "eulerian_lhs", "eulerian_margin"});
  for (std::size_t q = 0; q < rep.t.size(); ++q) {
    const std::string el = rep.eulerian_lhs.empty() ? "" : fmt(rep.eulerian_lhs[q]);
    const std::string em = rep.eulerian_margin.empty() ? "" : fmt(rep.eulerian_margin[q]);
    csv.row(rep.t[q], rep.lhs[q], rep.rhs[q], rep.margin[q], el, em);
  }
  out.files.push_back({"convexity.csv",
                       "entropy along mu_t against the convexity bound with lambda_K; margin = rhs - lhs", csv.str()});
  out.verdict = rep.verdict;
  double worst = INFINITY;
  for (std::size_t q = 0; q < rep.t.size(); ++q)
    if (rep.t[q] > 0.0 && rep.t[q] < 1.0) worst = std::min(worst, rep.margin[q]);
  out.summary = "lambda " + fmt(rep.lambda) + ", min interior margin " + fmt(worst) + ", form gap " + fmt(rep.form_gap);
  return out;
}

KindResult run_witness(const Scenario& s) {
  check_keys(s.params, {"potential", "radii", "t", "steps", "field", "bump_n", "tolerance", "pointwise_t"},
             "params");
  KindResult out;
  json kinfo;
  const double k = resolve_k(s, kinfo);
  const auto field = make_field(s, s.params);
  const json& pj = s.params.at("potential");
  const auto phi = make_potential(pj, *field);
  const Vec2 xs = vec2(pj.at("x_star"), "potential.x_star");
  const WitnessExperiment ex =
      witness_experiment(*field, *phi, xs, k, numbers_or(s.params, "radii", {0.04, 0.02, 0.01}),
                         numbers_or(s.params, "t", {0.0, 0.25, 0.5, 0.75, 1.0}), integer_or(s.params, "bump_n", 1024),
                         integer_or(s.params, "steps", 256));
  std::vector<std::string> header{"t", "pointwise", "extrapolated"};
  for (double r : ex.radii) header.push_back("radius_" + fmt(r));
  Csv csv(header);
  for (std::size_t q = 0; q < ex.t.size(); ++q) {
    std::ostringstream line;
    line << fmt(ex.t[q]) << ',' << fmt(ex.pointwise[q]) << ',' << fmt(ex.extrapolated[q]);
    for (std::size_t a = 0; a < ex.radii.size(); ++a) line << ',' << fmt(ex.margins[a][q]);
    csv.row(line.str());
  }
  out.files.push_back({"witness.csv",
                       "normalized convexity margins for concentrating bumps, their r -> 0 extrapolation and the "
                       "pointwise margin at x*",
                       csv.str()});
  const double delta = s.delta.empty() ? 0.0 : s.delta.front();
  std::vector<double> pt = numbers_or(s.params, "pointwise_t", {-0.5, -0.375, -0.25, -0.125, 0.0, 0.125, 0.25, 0.375, 0.5});
  const PointwiseConvexityReport pw = pointwise_convexity_check(*field, xs, ex.v, k, delta, pt, 512);
  Csv pcsv({"t", "value", "second_difference"});
  for (std::size_t q = 0; q < pw.t.size(); ++q) {
    const std::string d = (q == 0 || q + 1 == pw.t.size()) ? "" : fmt(pw.second_difference[q - 1]);
    pcsv.row(pw.t[q], pw.value[q], d);
  }
  out.files.push_back({"pointwise.csv", "-C(x*,t) - (K - delta/2) t^2 g(v,v)/2 and its second differences",
                       pcsv.str()});
  const double tol = number_or(s.params, "tolerance", 1e-4);
  out.report = kinfo;
  out.report["k"] = k;
  out.report["delta"] = delta;
  out.report["v"] = {ex.v(0), ex.v(1)};
  out.report["max_gap"] = ex.max_gap;
  out.report["pointwise_verdict"] = pw.verdict;
  out.report["margin_at_zero"] = pw.margin_at_zero;
  out.verdict = ex.max_gap <= tol && pw.verdict;
  out.summary = "extrapolation gap " + fmt(ex.max_gap) + ", pointwise " + (pw.verdict ? "convex" : "not convex") +
                ", margin at 0 " + fmt(pw.margin_at_zero);
  return out;
}

KindResult run_riccati(const Scenario& s) {
  check_keys(s.params, {"H", "s0", "t", "paths", "field", "intervals", "speed", "u0_scale"}, "params");
  KindResult out;
  const std::vector<double> t = numbers_or(s.params, "t", {0.0, 0.25, 0.5, 0.75, 1.0});
  const double h = number_or(s.params, "H", 1.0);
  const RiccatiEnvelope env = riccati_envelope(h, numbers_or(s.params, "s0", {0.0}), t);
  Csv ecsv({"s0", "t", "lower", "upper"});
  bool ordered = true;
  for (std::size_t i = 0; i < env.s0.size(); ++i)
    for (std::size_t k = 0; k < env.t.size(); ++k) {
      ecsv.row(env.s0[i], env.t[k], env.lower[i][k], env.upper[i][k]);
      ordered = ordered && env.lower[i][k] <= env.upper[i][k];
    }
  out.files.push_back({"envelope.csv", "explicit comparison solutions s_H (tan branch) and s_-H (tanh branch)",
                       ecsv.str()});
  out.report["H"] = h;
  out.report["blowup"] = env.blowup;
  out.report["truncated"] = env.truncated;
  out.report["envelope_ordered"] = ordered;
  out.verdict = ordered;
  const int paths = integer_or(s.params, "paths", 0);
  if (paths > 0) {
    const auto field = make_field(s, s.params);
    const int intervals = integer_or(s.params, "intervals", 256);
    const double speed = number_or(s.params, "speed", 0.25);
    const double u0s = number_or(s.params, "u0_scale", 0.3);
    Rng rng(s.seed);
    Csv pcsv({"path", "y0", "y1", "w0", "w1", "H", "violation"});
    double worst = 0.0;
    for (int p = 0; p < paths; ++p) {
      const Vec2 y(rng.uniform(), rng.uniform());
      const double ang = rng.uniform(0.0, 2.0 * 3.141592653589793);
      const Vec2 w = speed * Vec2(std::cos(ang), std::sin(ang));
      Mat2 u0;
      u0(0, 0) = rng.uniform(-u0s, u0s);
      u0(1, 1) = rng.uniform(-u0s, u0s);
      u0(0, 1) = u0(1, 0) = rng.uniform(-u0s, u0s);
      const JacobiCurvaturePath jp = jacobi_curvature_path(*field, y, w, 1.0, 2 * intervals);
      const RiccatiSolution sol = riccati_integrate(jp.k, u0, 1.0);
      const double viol = sandwich_violation(jp.sup_abs_eigen, sol);
      worst = std::max(worst, viol);
      pcsv.row(p, y(0), y(1), w(0), w(1), jp.sup_abs_eigen, viol);
    }
    out.files.push_back({"sandwich.csv",
                         "largest excursion of the eigenvalues of U = J'J^-1 outside the comparison envelope",
                         pcsv.str()});
    out.report["field"] = field_name(s.params);
    out.report["max_violation"] = worst;
    out.verdict = out.verdict && worst <= 1e-6;
    out.summary = "envelope " + std::string(ordered ? "ordered" : "NOT ordered") + ", sandwich violation " + fmt(worst);
  } else {
    out.summary = "envelope " + std::string(ordered ? "ordered" : "NOT ordered");
  }
  return out;
}

KindResult run_c2_identity(const Scenario& s) {
  check_keys(s.params, {"count", "speed", "steps", "field", "step", "tolerance"}, "params");
  KindResult out;
  const auto field = make_field(s, s.params);
  const int count = integer_or(s.params, "count", 10);
  const auto speed = numbers_or(s.params, "speed", {0.03, 0.08});
  if (speed.size() != 2) schema("params.speed must be [min, max]");
  const int steps = integer_or(s.params, "steps", 512);
  const double step = number_or(s.params, "step", 0.25);
  Rng rng(s.seed);
  Csv csv({"x", "y", "vx", "vy", "minus_c2", "ric_vv_oracle", "ric_vv_field", "relative_error"});
  double worst = 0.0;
  for (int q = 0; q < count; ++q) {
    const Vec2 xs(rng.uniform(), rng.uniform());
    const double ang = rng.uniform(0.0, 2.0 * 3.141592653589793);
    const Vec2 v = rng.uniform(speed[0], speed[1]) * Vec2(std::cos(ang), std::sin(ang));
    const CIdentityReport r = c_second_derivative_identity(*field, xs, v, steps, step);
    double oracle = r.rhs;
    if (s.model.has_expressions()) oracle = v.dot(curvature_at(s.model.geometry_at(xs, 2)).ric * v);
    const double rel = std::abs(r.lhs - oracle) / std::max(std::abs(oracle), 1e-300);
    worst = std::max(worst, rel);
    csv.row(xs(0), xs(1), v(0), v(1), r.lhs, oracle, r.rhs, rel);
  }
  out.files.push_back({"c2_identity.csv", "-C''(0) from the witness flow against Ric(v,v)", csv.str()});
  out.report = {{"field", field_name(s.params)}, {"count", count}, {"max_relative_error", worst}};
  out.verdict = worst <= number_or(s.params, "tolerance", 1e-2);
  out.summary = "max relative error " + fmt(worst);
  return out;
}

using Runner = KindResult (*)(const Scenario&);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> m{
      {"bound-check", run_bound_check}, {"friedrichs", run_friedrichs},
      {"commutators", run_commutators}, {"geodesic", run_geodesic},
      {"distance-matrix", run_distance_matrix}, {"ot", run_ot},
      {"displacement", run_displacement}, {"convexity", run_convexity},
      {"witness", run_witness},         {"riccati", run_riccati},
      {"c2-identity", run_c2_identity}};
  return m;
}

std::string versions_eigen() {
  return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
}

std::string versions_json() {
  return std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
         std::to_string(NLOHMANN_JSON_VERSION_PATCH);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
}

void write_manifest(const fs::path& out_dir, const json& config, const RunOutcome& r,
                    const std::vector<Artifact>& files, const std::optional<std::string>& error_code) {
  json m;
  m["schema_version"] = kSchemaVersion;
  m["scenario"] = config;
  m["versions"] = {{"curvlab", CURVLAB_VERSION}, {"eigen", versions_eigen()}, {"nlohmann_json", versions_json()}};
  m["status"] = r.status;
  m["verdict"] = r.verdict;
  m["expected_verdict"] = r.expected;
  m["passed"] = r.passed;
  m["summary"] = r.summary;
  json list = json::array();
  for (const auto& f : files)
    list.push_back({{"name", f.name}, {"quantity", f.quantity}, {"fnv1a", fnv1a_hex(f.content)}});
  m["files"] = list;
  if (error_code) m["error"] = {{"code", *error_code}, {"message", r.error}};
  write_file(out_dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace

const std::vector<std::string>& scenario_kinds() {
  static const std::vector<std::string> kinds = [] {
    std::vector<std::string> k;
    for (const auto& [name, fn] : runners()) k.push_back(name);
    return k;
  }();
  return kinds;
}

Scenario parse_scenario(const json& config) {
  check_keys(config,
             {"schema_version", "name", "kind", "metric", "n", "eps", "delta", "k", "k_offset", "seed",
              "expect_verdict", "params", "description"},
             "scenario");
  if (!config.contains("schema_version") || !config.at("schema_version").is_number_integer())
    schema("scenario needs an integer schema_version");
  if (config.at("schema_version").get<int>() != kSchemaVersion)
    schema("unsupported schema_version " + config.at("schema_version").dump());
  Scenario s;
  s.config = config;
  s.name = string_or(config, "name", "");
  if (s.name.empty()) schema("scenario needs a name");
  if (s.name.find_first_of("/\\") != std::string::npos) schema("scenario name must not contain path separators");
  s.kind = string_or(config, "kind", "");
  if (!runners().count(s.kind)) schema("unknown experiment kind '" + s.kind + "'");
  if (!config.contains("metric")) schema("scenario needs a metric");
  s.model = MetricModel::from_json(config.at("metric"));
  s.n = integer_or(config, "n", 256);
  if (s.n < 8) schema("n must be at least 8");
  s.eps = numbers_or(config, "eps", {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128});
  s.delta = numbers_or(config, "delta", {0.1});
  s.k = config.contains("k") ? config.at("k") : json(0.0);
  if (!s.k.is_number() && s.k != "gauss-min") schema("k must be a number or \"gauss-min\"");
  s.k_offset = number_or(config, "k_offset", 0.0);
  if (config.contains("seed")) {
    const auto& seed = config.at("seed");
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0))
      schema("seed must be a non-negative integer");
    s.seed = config.at("seed").get<std::uint64_t>();
  }
  if (config.contains("expect_verdict")) {
    if (!config.at("expect_verdict").is_boolean()) schema("expect_verdict must be a boolean");
    s.expect_verdict = config.at("expect_verdict").get<bool>();
  }
  s.params = config.contains("params") ? config.at("params") : json::object();
  if (!s.params.is_object()) schema("params must be an object");
  return s;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kSchema, "cannot read scenario " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("scenario is not valid JSON: ") + e.what());
  }
  return parse_scenario(j);
}

RunOutcome run_scenario(const Scenario& s, const fs::path& out_dir, bool assert_verdict) {
  RunOutcome r;
  r.name = s.name;
  r.kind = s.kind;
  r.expected = s.expect_verdict;
  fs::create_directories(out_dir);
  std::vector<Artifact> files;
  std::optional<std::string> code;
  try {
    KindResult k = runners().at(s.kind)(s);
    r.verdict = k.verdict;
    r.summary = k.summary;
    r.status = "ok";
    files = std::move(k.files);
    files.push_back({"report.json", "experiment report", k.report.dump(2) + "\n"});
  } catch (const Error& e) {
    r.status = e.code() == ErrorCode::kSchema ? "schema-error" : "error";
    r.error = e.what();
    code = to_string(e.code());
  } catch (const std::exception& e) {
    r.status = "error";
    r.error = e.what();
    code = "internal";
  }
  r.passed = r.status == "ok" && r.verdict == r.expected;
  if (r.status == "schema-error")
    r.exit_code = 2;
  else if (r.status == "error")
    r.exit_code = 3;
  else
    r.exit_code = (assert_verdict && !r.verdict) ? 1 : 0;
  for (const auto& f : files) write_file(out_dir / f.name, f.content);
  write_manifest(out_dir, s.config, r, files, code);
  std::string line = r.name + " " + r.kind + " " + (r.passed ? "PASS" : "FAIL") + " verdict=" +
                     (r.verdict ? "holds" : "fails") + " expected=" + (r.expected ? "holds" : "fails");
  if (r.status != "ok") line = r.name + " " + r.kind + " " + r.status + ": " + r.error;
  else line += ": " + r.summary;
  write_file(out_dir / "summary.txt", line + "\n");
  return r;
}

RunOutcome run_scenario_file(const fs::path& path, const fs::path& out_dir, bool assert_verdict) {
  Scenario s;
  try {
    s = load_scenario(path);
  } catch (const Error& e) {
    RunOutcome r;
    r.name = path.stem().string();
    r.status = "schema-error";
    r.error = e.what();
    r.exit_code = 2;
    fs::create_directories(out_dir);
    write_manifest(out_dir, json(), r, {}, std::string(to_string(e.code())));
    return r;
  }
  return run_scenario(s, out_dir, assert_verdict);
}

int run_suite(const fs::path& dir, const fs::path& out_dir, std::ostream& log) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kSchema, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<RunOutcome> results(files.size());
  parallel_for(static_cast<std::ptrdiff_t>(files.size()), [&](std::ptrdiff_t i) {
    results[i] = run_scenario_file(files[i], out_dir / files[i].stem(), false);
  });
  Csv csv({"file", "name", "kind", "status", "verdict", "expected", "passed"});
  int failed = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const RunOutcome& r = results[i];
    csv.row(files[i].filename().string(), r.name, r.kind, r.status, std::string(r.verdict ? "holds" : "fails"),
            std::string(r.expected ? "holds" : "fails"), std::string(r.passed ? "yes" : "no"));
    failed += !r.passed;
    log << (r.passed ? "PASS " : "FAIL ") << files[i].filename().string() << "  "
        << (r.status == "ok" ? r.summary : r.status + ": " + r.error) << '\n';
  }
  fs::create_directories(out_dir);
  write_file(out_dir / "summary.csv", csv.str());
  log << files.size() - failed << "/" << files.size() << " scenarios passed\n";
  return failed ? 1 : 0;
}

}  // namespace curvlab::cli
