// One PASS/FAIL line per acceptance criterion. Usage:
//   curvlab_acceptance [--criterion N] [--scenarios DIR]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "curvlab/curvature.hpp"
#include "curvlab/entropy.hpp"
#include "curvlab/geodesic.hpp"
#include "curvlab/metric_field.hpp"
#include "curvlab/mollify.hpp"
#include "curvlab/riccati.hpp"
#include "curvlab/transport.hpp"
#include "lp_oracle.hpp"
#include "models.hpp"
#include "scenario.hpp"

namespace {

using namespace curvlab;
using test::kPi;

const std::vector<double> kSweep{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [FAILED]");
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double sup_matrix_residual(const CurvatureFields& f, int n) {
  double err = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double k = test::conformal_gauss(static_cast<double>(i) / n, static_cast<double>(j) / n);
      err = std::max(err, (f.ric.matrix(i, j) - k * f.g.matrix(i, j)).cwiseAbs().maxCoeff());
    }
  return err;
}

double oracle_gauss_min(int n) {
  double k = INFINITY;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      k = std::min(k, test::conformal_gauss(static_cast<double>(i) / n, static_cast<double>(j) / n));
  return k;
}

Outcome flat_zero_suite() {
  Outcome o;
  const MetricModel flat = MetricModel::flat().sampled(64);
  double worst = 0.0;
  for (const CurvatureFields& f : {riemann_ricci(flat), riemann_ricci(smooth(flat, 1.0 / 8))})
    worst = std::max({worst, f.max_abs_christoffel(), f.max_abs_riemann(), f.ric.sup_norm()});
  o.check(worst <= 1e-10, "max |Gamma|,|Riem|,|Ric| = " + num(worst) + " (tol 1e-10)");
  const BoundReport rep = bound_check(flat, 0.0, {0.1, 0.05, 0.02, 0.001}, kSweep);
  bool all = true;
  for (const auto& v : rep.verdicts) all = all && v.holds;
  o.check(all, "bound K=0 holds for every delta");
  const AnalyticMetricField field(MetricModel::flat());
  test::Uniform rng(1);
  double straight = 0.0, drift = 0.0;
  for (int q = 0; q < 10; ++q) {
    const Vec2 y(rng(), rng()), w(rng(-1, 1), rng(-1, 1));
    const auto sol = integrate_geodesic(field, y, w);
    for (std::size_t k = 0; k < sol.t.size(); ++k) straight = std::max(straight, (sol.x[k] - y - sol.t[k] * w).norm());
    drift = std::max(drift, sol.energy_drift(field));
  }
  o.check(straight <= 1e-12, "deviation from straight lines " + num(straight));
  o.check(drift <= 1e-8, "energy drift " + num(drift) + " (tol 1e-8)");
  return o;
}

Outcome conformal_oracle() {
  Outcome o;
  const int n = 256;
  const MetricModel m = test::conformal_model().sampled(n);
  const double direct = sup_matrix_residual(riemann_ricci(m), n);
  const double smoothed = sup_matrix_residual(riemann_ricci(smooth(m, kSweep.back())), n);
  o.check(direct <= 5e-3 && smoothed <= 5e-3,
          "|Ric - K_g g| direct " + num(direct) + ", eps=1/128 " + num(smoothed) + " (tol 5e-3)");
  const double kmin = oracle_gauss_min(n);
  const BoundReport ok = bound_check(m, kmin, {0.02}, kSweep);
  o.check(ok.verdicts[0].holds, "K = oracle min " + num(kmin) + ", delta 0.02 holds");
  const BoundReport raised = bound_check(m, kmin + 0.1, {0.02}, kSweep);
  const auto& v = raised.verdicts[0];
  double dist = INFINITY;
  if (v.witness) {
    const Vec2 p(static_cast<double>(v.witness->i) / n, static_cast<double>(v.witness->j) / n);
    dist = std::min(flat_torus_distance(p, Vec2(0.75, 0.25)), flat_torus_distance(p, Vec2(0.25, 0.75)));
  }
  o.check(!v.holds && dist <= 0.05, "K = min + 0.1 fails, witness " + num(dist) + " from the argmin");
  return o;
}

Outcome commutator_convergence() {
  Outcome o;
  const MetricModel m = test::glued_model().sampled(256);
  std::vector<std::pair<std::string, CommutatorReport>> reports;
  reports.emplace_back("friedrichs", friedrichs_norms(parse_field(test::kGluedU), parse_field("sin(2*pi*x)*cos(2*pi*y)"),
                                                      kSweep, 256));
  reports.emplace_back("ricci", ricci_commutator_norms(m, kSweep));
  const auto pc = pairing_commutator_norms(m, {parse_field("1"), parse_field("0.5*sin(2*pi*y)")},
                                           {parse_field("cos(2*pi*x)"), parse_field("1")}, kSweep);
  reports.emplace_back("pairing-ricci", pc.ricci);
  reports.emplace_back("pairing-metric", pc.metric);
  for (const auto& [name, r] : reports) {
    double ratio = r.c0.back() / r.c0.front();
    for (const auto* col : {&r.c1, &r.c2})
      if (col->front()) ratio = std::max(ratio, *col->back() / *col->front());
    o.check(r.converges(0.25, 1), name + " last/first " + num(ratio));
  }
  return o;
}

Outcome bound_round_trip() {
  Outcome o;
  const MetricModel m = test::glued_model().sampled(256);
  const double k0 = test::glued_gauss_infimum();
  const BoundReport ok = bound_check(m, k0, {0.1, 0.05}, kSweep, 3);
  o.check(ok.verdicts[0].holds && ok.verdicts[1].holds, "K0 = " + num(k0) + " holds for delta 0.1 and 0.05");
  const BoundReport raised = bound_check(m, k0 + 0.2, {0.05}, kSweep, 3);
  o.check(!raised.verdicts[0].holds, "K0 + 0.2 fails (smallest-eps K_eff " + num(raised.entries.back().k_eff) + ")");
  return o;
}

Outcome transport_exactness() {
  Outcome o;
  test::Uniform rng(50);
  const AnalyticMetricField conformal(test::conformal_model());
  double value_err = 0.0, gap = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<Vec2> a, b;
    for (int i = 0; i < 50; ++i) a.emplace_back(rng(), rng());
    for (int j = 0; j < 50; ++j) b.emplace_back(rng(), rng());
    const auto wa = test::random_simplex(rng, 50), wb = test::random_simplex(rng, 50);
    Eigen::MatrixXd cost;
    if (trial == 0) {
      LogMapOptions lo;
      lo.steps = 64;
      cost = cost_matrix(conformal, a, b, lo);
    } else {
      cost.resize(50, 50);
      for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 50; ++j) cost(i, j) = 0.5 * std::pow(flat_torus_distance(a[i], b[j]), 2);
    }
    const ExactSolution ex = solve_exact(wa, wb, cost);
    value_err = std::max(value_err, std::abs(ex.plan.cost - test::transport_lp_value(wa, wb, cost)));
    gap = std::max(gap, ex.gap);
  }
  o.check(value_err <= 1e-9, "|exact - LP oracle| " + num(value_err) + " (tol 1e-9)");
  o.check(gap <= 1e-7, "duality gap " + num(gap) + " (tol 1e-7)");
  double dirac = 0.0;
  for (int q = 0; q < 5; ++q) {
    const Vec2 x(rng(), rng()), y(rng(), rng());
    dirac = std::max(dirac, std::abs(wasserstein2(DiscreteMeasure::dirac(x), DiscreteMeasure::dirac(y), conformal) -
                                     distance(conformal, x, y)));
  }
  o.check(dirac <= 1e-8, "Dirac |W2 - d| " + num(dirac) + " (tol 1e-8)");
  return o;
}

Outcome wasserstein_geodesic() {
  Outcome o;
  const AnalyticMetricField field(test::conformal_model());
  Mat2 a;
  a << 0.3, 0.05, 0.05, 0.2;
  const LocalQuadraticPotential phi(Vec2(0.4, 0.6), Vec2(0.08, -0.05), a, 0.3);
  const BumpMeasure mu0 = bump_measure(field, Vec2(0.4, 0.6), 0.05, 256);
  const std::vector<double> t{0.0, 0.25, 0.5, 0.75, 1.0};
  const DisplacementFamily fam = displacement_interpolation(field, phi, mu0, t);
  const std::size_t m = fam.base.size(), stride = (m + 47) / 48;
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
  auto w2 = [&](std::size_t s, std::size_t r) {
    std::vector<Vec2> ps, pr;
    for (std::size_t i : idx) {
      ps.push_back(fam.position[s][i]);
      pr.push_back(fam.position[r][i]);
    }
    return std::sqrt(2.0 * solve_exact(w, w, cost_matrix(field, ps, pr, lo)).plan.cost);
  };
  const double w01 = w2(0, 4);
  double rel = 0.0;
  for (std::size_t s = 0; s < t.size(); ++s)
    for (std::size_t r = s + 1; r < t.size(); ++r)
      if (!(s == 0 && r == 4)) rel = std::max(rel, std::abs(w2(s, r) - (t[r] - t[s]) * w01) / ((t[r] - t[s]) * w01));
  o.check(rel <= 1e-3, "max relative |W2(mu_s,mu_t) - |t-s| W2(mu_0,mu_1)| " + num(rel) + " (tol 1e-3)");
  const double id = std::abs(constructed - w01 * w01);
  o.check(id <= 1e-4, "Lagrangian W2^2 vs solver " + num(id) + " (tol 1e-4)");
  return o;
}

double interior_min(const ConvexityReport& r) {
  double m = INFINITY;
  for (std::size_t q = 0; q < r.t.size(); ++q)
    if (r.t[q] > 0.0 && r.t[q] < 1.0) m = std::min(m, r.margin[q]);
  return m;
}

Outcome displacement_convexity() {
  Outcome o;
  const auto boltzmann = EntropyFunction::boltzmann();
  const AnalyticMetricField flat(MetricModel::flat());
  const BumpMeasure flat_bump = bump_measure(flat, Vec2(0.5, 0.5), 0.05, 256);
  const auto translation = convexity_check(flat, LocalQuadraticPotential(Vec2(0.5, 0.5), Vec2(0.12, 0.07), Mat2::Zero(), 0.3),
                                           flat_bump, 0.0, boltzmann, {});
  double tr = 0.0;
  for (double m : translation.margin) tr = std::max(tr, std::abs(m));
  o.check(tr <= 1e-8, "flat translation max|margin| " + num(tr) + " (tol 1e-8)");
  const auto contraction =
      convexity_check(flat, LocalQuadraticPotential(Vec2(0.5, 0.5), Vec2::Zero(), Mat2::Identity() * 0.6, 0.3),
                      flat_bump, 0.0, boltzmann, {});
  const double co = interior_min(contraction);
  o.check(co >= 0.0, "flat contraction min interior margin " + num(co) + " (>= 0)");

  // witness with a prescribed Hessian transverse to v
  const MetricModel model = test::conformal_model();
  const AnalyticMetricField field(model);
  const double kmin = oracle_gauss_min(256);
  const double speed = 0.23;
  const Vec2 xs(0.75 - speed / 2, 0.25), v(speed, 0.0);
  const Mat2 g = field.at(xs, 0).g;
  const Vec2 gn = g * Vec2(0.0, 1.0 / std::sqrt(g(1, 1)));
  const double s = std::round(-0.5 * kmin * v.dot(g * v) * 1e6) / 1e6;
  const auto phi = build_witness_potential(field, xs, v, 0.2, s * gn * gn.transpose());
  const BumpMeasure bump = bump_measure(field, xs, 0.03, 256);
  const auto at_bound = convexity_check(field, phi, bump, kmin, boltzmann, {});
  const double mb = interior_min(at_bound);
  o.check(mb >= -1e-3, "conformal lambda = K_min " + num(kmin) + ": min interior margin " + num(mb) + " (>= -1e-3)");
  const auto raised = convexity_check(field, phi, bump, kmin + 0.5, boltzmann, {});
  const double mr = interior_min(raised);
  o.check(!raised.verdict && mr < -1e-3, "designed instance at K_min + 0.5 fails: min interior margin " + num(mr));
  return o;
}

Outcome c_identity() {
  Outcome o;
  const MetricModel model = test::conformal_model();
  const GridMetricField field(smooth(model.sampled(256), kSweep.back()));
  test::Uniform rng(8);
  double worst = 0.0, oracle_dev = 0.0;
  for (int q = 0; q < 10; ++q) {
    const Vec2 xs(rng(), rng());
    const double a = rng(0, 2 * kPi);
    const Vec2 v = rng(0.03, 0.08) * Vec2(std::cos(a), std::sin(a));
    const auto r = c_second_derivative_identity(field, xs, v, 512);
    worst = std::max(worst, r.relative_error);
    const double exact = test::conformal_gauss(xs.x(), xs.y()) * v.dot(model.geometry_at(xs, 0).g * v);
    oracle_dev = std::max(oracle_dev, std::abs(r.lhs - exact));
  }
  o.check(worst <= 1e-2, "max relative |C''(0) + Ric(v,v)| " + num(worst) + " over 10 witnesses (tol 1e-2)");
  o.detail += "; |C''(0) + Ric_exact(v,v)| " + num(oracle_dev);
  return o;
}

Outcome riccati_sandwich() {
  Outcome o;
  const AnalyticMetricField field(test::conformal_model());
  test::Uniform rng(9);
  double worst = 0.0, hmax = 0.0;
  for (int q = 0; q < 10; ++q) {
    const Vec2 y(rng(), rng());
    const double a = rng(0, 2 * kPi);
    const auto path = jacobi_curvature_path(field, y, 0.25 * Vec2(std::cos(a), std::sin(a)), 1.0, 512);
    Mat2 u0;
    u0(0, 0) = rng(-0.3, 0.3);
    u0(1, 1) = rng(-0.3, 0.3);
    u0(0, 1) = u0(1, 0) = rng(-0.3, 0.3);
    worst = std::max(worst, sandwich_violation(path.sup_abs_eigen, riccati_integrate(path.k, u0, 1.0)));
    hmax = std::max(hmax, path.sup_abs_eigen);
  }
  o.check(worst <= 1e-6, "sandwich violation " + num(worst) + " (tol 1e-6, H up to " + num(hmax) + ")");
  double closed = 0.0;
  for (double h : {0.5, 1.0, 2.0})
    for (double s0 : {-0.4, 0.0, 0.4}) {
      // stay well inside the focusing time of the positive branch
      const double focus = (std::atan(s0 / std::sqrt(h)) + kPi / 2) / std::sqrt(h);
      const double horizon = std::min(1.0, 0.5 * focus);
      const auto lower = riccati_integrate(std::vector<Mat2>(1025, Mat2::Identity() * h), Mat2::Identity() * s0, horizon);
      const auto upper = riccati_integrate(std::vector<Mat2>(1025, Mat2::Identity() * -h), Mat2::Identity() * s0, horizon);
      for (std::size_t k = 0; k < lower.t.size(); ++k) {
        closed = std::max(closed, (lower.u[k] - Mat2::Identity() * riccati_lower(h, s0, lower.t[k])).cwiseAbs().maxCoeff());
        closed = std::max(closed, (upper.u[k] - Mat2::Identity() * riccati_upper(h, s0, upper.t[k])).cwiseAbs().maxCoeff());
      }
    }
  o.check(closed <= 1e-8, "constant curvature closed forms " + num(closed) + " (tol 1e-8)");
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path g_scenarios = CURVLAB_SCENARIO_DIR;

Outcome determinism() {
  namespace fs = std::filesystem;
  Outcome o;
  const fs::path tmp = fs::temp_directory_path() / "curvlab-acceptance-determinism";
  fs::remove_all(tmp);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(g_scenarios))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  int identical = 0, passed = 0;
  std::string bad;
  for (const auto& f : files) {
    const auto a = tmp / "a" / f.stem(), b = tmp / "b" / f.stem();
    const auto ra = cli::run_scenario_file(f, a, false);
    cli::run_scenario_file(f, b, false);
    passed += ra.passed;
    bool same = true;
    for (const auto& e : fs::directory_iterator(a)) same = same && slurp(e.path()) == slurp(b / e.path().filename());
    identical += same;
    if (!same || !ra.passed) bad += " " + f.stem().string();
  }
  fs::remove_all(tmp);
  const int total = static_cast<int>(files.size());
  o.check(total > 0 && identical == total, std::to_string(identical) + "/" + std::to_string(total) + " scenarios byte-identical");
  o.check(passed == total, std::to_string(passed) + "/" + std::to_string(total) + " scenario verdicts as expected" +
                               (bad.empty() ? "" : " (" + bad.substr(1) + ")"));
  return o;
}

struct Criterion {
  int id;
  const char* title;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int a = 1; a < argc; ++a) {
    if (!std::strcmp(argv[a], "--criterion") && a + 1 < argc) only = std::atoi(argv[++a]);
    else if (!std::strcmp(argv[a], "--scenarios") && a + 1 < argc) g_scenarios = argv[++a];
    else {
      std::fprintf(stderr, "usage: %s [--criterion N] [--scenarios DIR]\n", argv[0]);
      return 2;
    }
  }
  const std::vector<Criterion> criteria{
      {1, "flat torus zero suite", 10, flat_zero_suite},
      {2, "conformal curvature oracle", 60, conformal_oracle},
      {3, "Friedrichs and commutator convergence", 120, commutator_convergence},
      {4, "Ricci bound round trip (C11)", 120, bound_round_trip},
      {5, "optimal transport exactness", 30, transport_exactness},
      {6, "Wasserstein geodesic property", 120, wasserstein_geodesic},
      {7, "displacement convexity", 180, displacement_convexity},
      {8, "C''(0) = -Ric(v,v)", 60, c_identity},
      {9, "Riccati sandwich", 30, riccati_sandwich},
      {10, "determinism", 600, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (only && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.check(secs < c.limit_s, "runtime " + num(secs) + " s (limit " + num(c.limit_s) + " s)");
    failures += !o.pass;
    std::printf("%-4s criterion %2d  %-40s %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
