#include <cmath>

#include <gtest/gtest.h>

#include "curvlab/error.hpp"
#include "curvlab/geodesic.hpp"
#include "curvlab/metric_field.hpp"
#include "curvlab/potential.hpp"
#include "models.hpp"

namespace curvlab {
namespace {

class ConformalGeodesic : public ::testing::Test {
 protected:
  AnalyticMetricField field{test::conformal_model()};
};

TEST(Geodesic, FlatLinesAreStraight) {
  const AnalyticMetricField flat(MetricModel::flat());
  const Vec2 y(0.1, 0.2), w(0.7, -0.3);
  const auto sol = integrate_geodesic(flat, y, w);
  for (std::size_t k = 0; k < sol.t.size(); ++k) EXPECT_LT((sol.x[k] - (y + sol.t[k] * w)).norm(), 1e-14);
  EXPECT_EQ(sol.energy_drift(flat), 0.0);
  EXPECT_NEAR(distance(flat, Vec2(0.05, 0.5), Vec2(0.95, 0.5)), 0.1, 1e-12);
}

TEST_F(ConformalGeodesic, EnergyIsConserved) {
  const auto sol = integrate_geodesic(field, Vec2(0.3, 0.7), Vec2(0.4, 0.25));
  EXPECT_LT(sol.energy_drift(field), 1e-8);
}

TEST_F(ConformalGeodesic, PropagatorMatchesFiniteDifferences) {
  const Vec2 y(0.3, 0.7), w(0.4, 0.25);
  const double h = 1e-5;
  const auto sol = integrate_geodesic(field, y, w);
  const Mat2 j = sol.jacobian(sol.t.size() - 1);
  const Mat2 jw = sol.dx_dw(sol.t.size() - 1);
  for (int a = 0; a < 2; ++a) {
    const Vec2 e = Vec2::Unit(a) * h;
    const Vec2 dy = (integrate_geodesic(field, y + e, w).x.back() - integrate_geodesic(field, y - e, w).x.back()) / (2 * h);
    const Vec2 dw = (integrate_geodesic(field, y, w + e).x.back() - integrate_geodesic(field, y, w - e).x.back()) / (2 * h);
    EXPECT_LT((j.col(a) - dy).norm(), 1e-4);
    EXPECT_LT((jw.col(a) - dw).norm(), 1e-4);
  }
}

TEST_F(ConformalGeodesic, ParallelFrameStaysOrthonormal) {
  GeodesicOptions opt;
  opt.frame = true;
  const auto sol = integrate_geodesic(field, Vec2(0.6, 0.1), Vec2(-0.3, 0.5), opt);
  for (std::size_t k = 0; k < sol.t.size(); k += 32) {
    const Mat2 e = sol.frame[k];
    const Mat2 gram = e.transpose() * field.at(sol.x[k], 0).g * e;
    EXPECT_LT((gram - Mat2::Identity()).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST_F(ConformalGeodesic, LogMapInvertsExpMap) {
  test::Uniform rng(21);
  for (int q = 0; q < 10; ++q) {
    const Vec2 y(rng(), rng());
    const Vec2 v(rng(-0.2, 0.2), rng(-0.2, 0.2));
    const Vec2 x = exp_map(field, y, v);
    EXPECT_LT((log_map(field, y, wrap_unit(x)) - v).norm(), 1e-8);
    const Vec2 l = log_map(field, y, wrap_unit(x));
    EXPECT_NEAR(std::sqrt(l.dot(field.at(y, 0).g * l)), distance(field, y, wrap_unit(x)), 1e-6);
  }
}

TEST_F(ConformalGeodesic, DistanceWithinConformalBand) {
  test::Uniform rng(5);
  for (int q = 0; q < 10; ++q) {
    const Vec2 a(rng(), rng()), b(rng(), rng());
    const double d = distance(field, a, b), e = flat_torus_distance(a, b);
    EXPECT_GE(d, std::exp(-0.05) * e - 1e-12);
    EXPECT_LE(d, std::exp(0.05) * e + 1e-12);
    EXPECT_NEAR(d, distance(field, b, a), 1e-8);
  }
}

TEST_F(ConformalGeodesic, DistanceMatrixIsAMetric) {
  test::Uniform rng(8);
  std::vector<Vec2> p;
  for (int q = 0; q < 6; ++q) p.emplace_back(rng(), rng());
  const auto d = distance_matrix(field, p, p);
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(d(i, i), 0.0);
    for (int j = 0; j < 6; ++j)
      for (int k = 0; k < 6; ++k) EXPECT_LE(d(i, k), d(i, j) + d(j, k) + 1e-6);
  }
}

TEST_F(ConformalGeodesic, GraphDistanceIsAnUpperEstimate) {
  const Vec2 a(0.1, 0.2), b(0.45, 0.6);
  const double d = distance(field, a, b);
  const double gd = graph_distance(field, a, b, 128);
  EXPECT_GE(gd, d - 1e-9);
  EXPECT_LT(gd, 1.03 * d);
}

TEST_F(ConformalGeodesic, GradientOfHalfSquaredDistance) {
  test::Uniform rng(13);
  for (int q = 0; q < 5; ++q) {
    const Vec2 y(rng(), rng());
    const Vec2 x = y + Vec2(rng(-0.15, 0.15), rng(-0.15, 0.15));
    const Vec2 grad = grad_half_dist_sq(field, y, x);
    const double h = 1e-5;
    Vec2 diff;
    for (int a = 0; a < 2; ++a) {
      const Vec2 e = Vec2::Unit(a) * h;
      diff(a) = (std::pow(distance(field, y, x + e), 2) - std::pow(distance(field, y, x - e), 2)) / (4 * h);
    }
    // coordinate differential = g * gradient
    EXPECT_LT((field.at(x, 0).g * grad - diff).norm(), 1e-5);
  }
}

TEST_F(ConformalGeodesic, FlowJacobianMatchesFiniteDifferences) {
  const LocalQuadraticPotential phi(Vec2(0.4, 0.6), Vec2(0.05, -0.03), Mat2::Identity() * 0.3, 0.3);
  const Vec2 y(0.42, 0.57);
  const std::vector<double> ts{0.0, 0.5, 1.0};
  const auto fj = flow_jacobian(field, phi, y, ts);
  const double h = 1e-5;
  for (int a = 0; a < 2; ++a) {
    const Vec2 e = Vec2::Unit(a) * h;
    const auto p = flow_jacobian(field, phi, y + e, ts), m = flow_jacobian(field, phi, y - e, ts);
    for (std::size_t k = 0; k < ts.size(); ++k)
      EXPECT_LT((fj.jacobian[k].col(a) - (p.position[k] - m.position[k]) / (2 * h)).norm(), 1e-6);
  }
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double vol = std::sqrt(field.at(fj.position[k], 0).g.determinant() / field.at(y, 0).g.determinant());
    EXPECT_NEAR(fj.log_det[k], std::log(fj.jacobian[k].determinant() * vol), 1e-12);
  }
}

TEST(Flow, FlatClosedForm) {
  const AnalyticMetricField flat(MetricModel::flat());
  Mat2 a;
  a << 0.5, 0.1, 0.1, 0.3;
  const LocalQuadraticPotential phi(Vec2(0.5, 0.5), Vec2(0.1, 0.0), a, 0.3);
  const Vec2 y(0.52, 0.47);
  const auto fj = flow_jacobian(flat, phi, y, {0.0, 0.3, 1.0});
  const Vec2 d = y - Vec2(0.5, 0.5);
  for (std::size_t k = 0; k < 3; ++k) {
    const double t = fj.t[k];
    EXPECT_LT((fj.position[k] - (y - t * (Vec2(0.1, 0.0) + a * d))).norm(), 1e-14);
    EXPECT_LT((fj.jacobian[k] - (Mat2::Identity() - t * a)).norm(), 1e-14);
  }
}

TEST(Flow, DetectsFocalPoints) {
  const AnalyticMetricField flat(MetricModel::flat());
  const LocalQuadraticPotential phi(Vec2(0.5, 0.5), Vec2::Zero(), Mat2::Identity() * 2.0, 0.3);
  try {
    flow_jacobian(flat, phi, Vec2(0.51, 0.5), {0.0, 1.0});
    FAIL();
  } catch (const NonInvertibleError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonInvertible);
  }
}

}  // namespace
}  // namespace curvlab
