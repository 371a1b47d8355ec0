#include <cmath>

#include <gtest/gtest.h>

#include "curvlab/error.hpp"
#include "curvlab/metric_field.hpp"
#include "curvlab/riccati.hpp"
#include "models.hpp"

namespace curvlab {
namespace {

// Scalar RK4 for s' = -s^2 - c with many steps.
double rk4(double c, double s0, double t) {
  const int steps = 20000;
  const double h = t / steps;
  auto f = [c](double s) { return -s * s - c; };
  double s = s0;
  for (int k = 0; k < steps; ++k) {
    const double k1 = f(s), k2 = f(s + h / 2 * k1), k3 = f(s + h / 2 * k2), k4 = f(s + h * k3);
    s += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return s;
}

TEST(Riccati, ClosedFormsMatchNumericalSolutions) {
  for (double h : {0.5, 1.0, 4.0})
    for (double s0 : {-0.5, 0.0, 0.3, 1.0, 2.0, 3.0}) {
      const double t_end = std::min(1.0, 0.9 * riccati_blowup(h, s0));
      EXPECT_NEAR(riccati_lower(h, s0, t_end), rk4(h, s0, t_end), 1e-9) << h << ' ' << s0;
      EXPECT_NEAR(riccati_upper(h, s0, 1.0), rk4(-h, s0, 1.0), 1e-9) << h << ' ' << s0;
    }
}

TEST(Riccati, FlatCase) {
  EXPECT_NEAR(riccati_lower(0.0, 0.5, 1.0), 0.5 / 1.5, 1e-15);
  EXPECT_NEAR(riccati_upper(0.0, -0.25, 2.0), -0.25 / 0.5, 1e-15);
  EXPECT_NEAR(riccati_blowup(0.0, -2.0), 0.5, 1e-15);
  EXPECT_TRUE(std::isinf(riccati_blowup(0.0, 1.0)));
}

TEST(Riccati, EquilibriumOfUpperBranch) {
  EXPECT_NEAR(riccati_upper(4.0, 2.0, 0.7), 2.0, 1e-14);
  EXPECT_NEAR(riccati_upper(4.0, -2.0, 0.7), -2.0, 1e-14);
}

TEST(Riccati, BlowupTime) {
  const double kPi = test::kPi;
  EXPECT_NEAR(riccati_blowup(1.0, 0.0), kPi / 2, 1e-15);
  EXPECT_NEAR(riccati_blowup(4.0, 0.0), kPi / 4, 1e-15);
  EXPECT_LT(riccati_lower(1.0, 0.0, kPi / 2 - 1e-6), -1e5);
}

TEST(Riccati, EnvelopeIsOrderedAndTruncated) {
  const auto env = riccati_envelope(4.0, {-1.0, 0.0, 1.0}, {0.0, 0.25, 0.5, 0.75, 1.0});
  EXPECT_TRUE(env.truncated);
  for (std::size_t i = 0; i < env.s0.size(); ++i) {
    ASSERT_EQ(env.lower[i].size(), env.upper[i].size());
    for (std::size_t k = 0; k < env.lower[i].size(); ++k) EXPECT_LE(env.lower[i][k], env.upper[i][k]);
    EXPECT_NEAR(env.lower[i].front(), env.s0[i], 1e-15);
  }
  EXPECT_FALSE(riccati_envelope(0.5, {0.0}, {0.0, 1.0}).truncated);
}

TEST(Riccati, ConstantCurvatureMatrixSolution) {
  for (double h : {1.0, -1.0, 1.5}) {
    const std::vector<Mat2> k(513, Mat2::Identity() * h);
    const auto sol = riccati_integrate(k, Mat2::Identity() * 0.2, 1.0);
    const double oracle = h > 0 ? riccati_lower(h, 0.2, 1.0) : riccati_upper(-h, 0.2, 1.0);
    EXPECT_LT((sol.u.back() - Mat2::Identity() * oracle).cwiseAbs().maxCoeff(), 1e-9) << h;
    EXPECT_NEAR(sol.trace.back(), 2 * oracle, 1e-9);
  }
}

TEST(Riccati, FocusingRaisesNonInvertible) {
  const std::vector<Mat2> k(513, Mat2::Identity() * 10.0);
  EXPECT_THROW(riccati_integrate(k, Mat2::Zero(), 1.0), NonInvertibleError);
}

TEST(Riccati, SandwichAlongConformalGeodesics) {
  const AnalyticMetricField field(test::conformal_model());
  test::Uniform rng(42);
  for (int q = 0; q < 4; ++q) {
    const Vec2 y(rng(), rng());
    const double a = rng(0, 2 * test::kPi);
    const auto path = jacobi_curvature_path(field, y, 0.25 * Vec2(std::cos(a), std::sin(a)), 1.0, 256);
    EXPECT_GT(path.sup_abs_eigen, 0.0);
    Mat2 u0;
    u0 << rng(-0.3, 0.3), 0.1, 0.1, rng(-0.3, 0.3);
    const auto sol = riccati_integrate(path.k, u0, 1.0);
    EXPECT_LE(sandwich_violation(path.sup_abs_eigen, sol), 1e-6);
  }
}

}  // namespace
}  // namespace curvlab
