#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "curvlab/curvature.hpp"
#include "models.hpp"

namespace curvlab {
namespace {

using test::kPi;

TEST(GeneralizedEigen, MatchesClosedForm) {
  Mat2 a, b;
  a << 2, 1, 1, 3;
  b << 2, 0, 0, 1;
  const auto e = generalized_eigen(a, b);
  // det(a - l b) = 2 l^2 - 8 l + 5
  EXPECT_NEAR(e.lambda_min, (8 - std::sqrt(24.0)) / 4, 1e-14);
  EXPECT_NEAR(e.lambda_max, (8 + std::sqrt(24.0)) / 4, 1e-14);
  EXPECT_NEAR(e.v_min.dot(b * e.v_min), 1.0, 1e-14);
  EXPECT_LT((a * e.v_min - e.lambda_min * b * e.v_min).norm(), 1e-13);
}

TEST(Curvature, FlatTorusVanishes) {
  const auto f = riemann_ricci(MetricModel::flat().sampled(32));
  EXPECT_EQ(f.max_abs_christoffel(), 0.0);
  EXPECT_EQ(f.max_abs_riemann(), 0.0);
  EXPECT_EQ(f.ric.sup_norm(), 0.0);
}

TEST(Curvature, ConformalChristoffelOracle) {
  const MetricModel m = test::conformal_model().sampled(64);
  const auto f = christoffel(m);
  const FieldExpr u = parse_field(test::kConformalU), ux = u.dx(), uy = u.dy();
  double err = 0.0;
  for (int j = 0; j < 64; ++j)
    for (int i = 0; i < 64; ++i) {
      const double x = i / 64.0, y = j / 64.0, a = ux(x, y), b = uy(x, y);
      const auto& g = f.gamma[f.g.index(i, j)];
      Mat2 g1, g2;
      g1 << a, b, b, -a;
      g2 << -b, a, a, b;
      err = std::max({err, (g[0] - g1).cwiseAbs().maxCoeff(), (g[1] - g2).cwiseAbs().maxCoeff()});
    }
  EXPECT_LT(err, 1e-8);
  EXPECT_EQ(f.christoffel_symmetry_defect(), 0.0);
}

TEST(Curvature, ConformalRicciOracleDirectAndSmoothed) {
  const int n = 256;
  const MetricModel m = test::conformal_model().sampled(n);
  auto residual = [&](const CurvatureFields& f) {
    double err = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double k = test::conformal_gauss(static_cast<double>(i) / n, static_cast<double>(j) / n);
        err = std::max(err, (f.ric.matrix(i, j) - k * f.g.matrix(i, j)).cwiseAbs().maxCoeff());
      }
    return err;
  };
  const auto direct = riemann_ricci(m);
  EXPECT_LT(residual(direct), 5e-3);
  EXPECT_LT(direct.proportionality_residual(), 1e-12);
  EXPECT_LT(direct.ricci_symmetry_defect(), 1e-14);
  EXPECT_LT(residual(riemann_ricci(smooth(m, 1.0 / 128))), 5e-3);
}

TEST(Curvature, PointwiseMatchesGrid) {
  const MetricModel m = test::conformal_model();
  const PointCurvature c = curvature_at(m.geometry_at(Vec2(0.3, 0.7)));
  EXPECT_NEAR(c.gauss, test::conformal_gauss(0.3, 0.7), 1e-12);
  // Riemann antisymmetry in the last pair and Ric = R^m_imj
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double ric = 0.0;
      for (int k = 0; k < 2; ++k) {
        for (int l = 0; l < 2; ++l) EXPECT_NEAR(c.riem(a, b, k, l), -c.riem(a, b, l, k), 1e-13);
        ric += c.riem(k, a, k, b);
      }
      EXPECT_NEAR(ric, c.ric(a, b), 1e-13);
    }
}

TEST(Curvature, JacobiOperatorOfConstantCurvature) {
  const MetricModel m = test::conformal_model();
  const LocalGeometry geo = m.geometry_at(Vec2(0.3, 0.7));
  const PointCurvature c = curvature_at(geo);
  const Mat2 e = Mat2::Identity() / std::sqrt(geo.g(0, 0));
  const Vec2 v(0.2, -0.1);
  const Mat2 kj = jacobi_curvature(c.riem, geo.g, v, e);
  const Vec2 gv = geo.g * v;
  Mat2 oracle;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      oracle(i, j) = c.gauss * (v.dot(gv) * (i == j) - e.col(i).dot(gv) * e.col(j).dot(gv));
  EXPECT_LT((kj - oracle).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Curvature, GluedDirectPathMatchesPiecewiseOracle) {
  const int n = 256;
  const auto f = riemann_ricci(test::glued_model().sampled(n));
  const double h = 1.0 / n;
  double err = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) / n, y = static_cast<double>(j) / n;
      const double r = periodic_displacement(Vec2(x - 0.5, y - 0.5)).norm();
      if (std::abs(r - 0.2) <= 2 * h) continue;
      err = std::max(err, std::abs(f.gauss(i, j) - test::glued_gauss(x, y)));
    }
  EXPECT_LT(err, 1e-10);
}

TEST(Pairing, GaussBonnetForConformalModel) {
  const auto r = distributional_pairing(test::conformal_model().sampled(128), {parse_field("1"), parse_field("0")},
                                        parse_field("1"), {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128});
  // Ric(dx, dx) = K g11 = -lap u integrates to zero
  EXPECT_NEAR(r.extrapolated, 0.0, 1e-4);
  ASSERT_TRUE(r.direct.has_value());
  EXPECT_NEAR(*r.direct, 0.0, 1e-4);
}

TEST(Pairing, GluedSmoothedLimitMatchesDirectIntegral) {
  const auto r = distributional_pairing(test::glued_model().sampled(256),
                                        {parse_field("1"), parse_field("0.5*sin(2*pi*y)")},
                                        parse_field("1 + 0.5*cos(2*pi*x)"), {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128});
  ASSERT_TRUE(r.direct.has_value());
  EXPECT_NEAR(r.extrapolated, *r.direct, 1e-3);
  EXPECT_TRUE(r.converged);
}

TEST(BoundCheck, FlatTorusZeroBound) {
  const auto rep = bound_check(MetricModel::flat().sampled(32), 0.0, {0.1, 0.01}, {1.0 / 8, 1.0 / 16, 1.0 / 32});
  for (const auto& v : rep.verdicts) {
    EXPECT_TRUE(v.holds);
    EXPECT_FALSE(v.witness.has_value());
  }
  const auto fail = bound_check(MetricModel::flat().sampled(32), 0.1, {0.05}, {1.0 / 8, 1.0 / 16, 1.0 / 32});
  EXPECT_FALSE(fail.verdicts[0].holds);
  ASSERT_TRUE(fail.verdicts[0].witness.has_value());
  EXPECT_EQ(fail.verdicts[0].witness->k_eff, 0.0);
}

TEST(BoundCheck, EffectiveBoundOfConformalModelIsGaussMinimum) {
  const int n = 128;
  const auto f = riemann_ricci(test::conformal_model().sampled(n));
  const BoundEntry e = effective_bound(f, 0.0);
  double kmin = INFINITY;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      kmin = std::min(kmin, test::conformal_gauss(static_cast<double>(i) / n, static_cast<double>(j) / n));
  EXPECT_NEAR(e.k_eff, kmin, 1e-10);
  const auto j = to_json(bound_check({f}, {0.0}, kmin, {0.02}, 1));
  EXPECT_TRUE(j.at("verdicts").at(0).at("holds").get<bool>());
}

}  // namespace
}  // namespace curvlab
