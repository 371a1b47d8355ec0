#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "curvlab/error.hpp"
#include "curvlab/grid.hpp"
#include "curvlab/io.hpp"
#include "models.hpp"

namespace curvlab {
namespace {

using test::kPi;

PeriodicGridField sine_x(int n) {
  return PeriodicGridField::sample(n, [](double x, double) { return std::sin(2 * kPi * x); });
}

TEST(Grid, IndexWrapsInBothDirections) {
  PeriodicGridField f(8, Rank::kScalar);
  f(-1, 9) = 3.0;
  EXPECT_EQ(f(7, 1), 3.0);
  EXPECT_EQ(f.index(8, -8), f.index(0, 0));
}

TEST(Grid, RankComponents) {
  EXPECT_EQ(component_count(Rank::kScalar), 1);
  EXPECT_EQ(component_count(Rank::kVector), 2);
  EXPECT_EQ(component_count(Rank::kMatrix), 4);
  EXPECT_EQ(rank_from_string(to_string(Rank::kMatrix)), Rank::kMatrix);
}

TEST(Grid, RectangleRuleIsExactOnTrigonometricModes) {
  const auto f = PeriodicGridField::sample(32, [](double x, double y) {
    return std::pow(std::sin(2 * kPi * x), 2) * (1 + std::cos(2 * kPi * y));
  });
  EXPECT_NEAR(integrate(f), 0.5, 1e-14);
}

TEST(Grid, FourthOrderDifferenceMatchesDerivative) {
  const int n = 64;
  const auto d = finite_diff(sine_x(n), Axis::kX);
  double err = 0.0;
  for (int i = 0; i < n; ++i) err = std::max(err, std::abs(d(i, 5) - 2 * kPi * std::cos(2 * kPi * i / n)));
  // truncation (2 pi)^5 h^4 / 30
  EXPECT_LT(err, std::pow(2 * kPi, 5) * std::pow(1.0 / n, 4) / 30 * 1.1);
  const auto dy = finite_diff(sine_x(n), Axis::kY);
  EXPECT_LT(dy.sup_norm(), 1e-12);
}

TEST(Grid, SecondOrderDifferenceConverges) {
  auto err = [](int n) {
    const auto d = finite_diff(sine_x(n), Axis::kX, DiffScheme::kCentral2);
    double e = 0.0;
    for (int i = 0; i < n; ++i) e = std::max(e, std::abs(d(i, 0) - 2 * kPi * std::cos(2 * kPi * i / n)));
    return e;
  };
  EXPECT_NEAR(err(32) / err(64), 4.0, 0.05);
}

TEST(Kernel, UnitMassAndSymmetry) {
  for (double eps : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    const Kernel k = Kernel::bump(eps, 128);
    EXPECT_NEAR(k.mass(), 1.0, 1e-14);
    const int r = k.radius_nodes();
    for (int a = -r; a <= r; ++a)
      for (int b = -r; b <= r; ++b) {
        EXPECT_GE(k.weight(a, b), 0.0);
        EXPECT_DOUBLE_EQ(k.weight(a, b), k.weight(-a, b));
        EXPECT_DOUBLE_EQ(k.weight(a, b), k.weight(b, a));
      }
  }
}

TEST(Kernel, RejectsChartSizedRadius) {
  try {
    Kernel::bump(0.6, 64);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kKernelExceedsChart);
  }
  EXPECT_THROW(Kernel::bump(-1.0, 64), Error);
}

TEST(Convolve, PreservesIntegralAndConstants) {
  const int n = 64;
  const auto f = PeriodicGridField::sample(n, [](double x, double y) {
    return std::exp(std::sin(2 * kPi * x)) + std::cos(4 * kPi * y);
  });
  const Kernel k = Kernel::bump(1.0 / 16, n);
  EXPECT_NEAR(integrate(convolve(f, k)), integrate(f), 1e-13);
  const PeriodicGridField c(n, Rank::kMatrix, 2.5);
  EXPECT_LT((convolve(c, k) - c).sup_norm(), 1e-14);
}

TEST(Convolve, DerivativeKernelCommutesWithDifferentiation) {
  const int n = 128;
  const auto f = sine_x(n);
  const double eps = 1.0 / 16;
  const auto smooth_d = convolve(f, Kernel::bump(eps, n, KernelDerivative::kX));
  const auto d_smooth = finite_diff(convolve(f, Kernel::bump(eps, n)), Axis::kX);
  EXPECT_LT((smooth_d - d_smooth).sup_norm(), 2e-3);
}

TEST(Convolve, SmoothingErrorIsSecondOrder) {
  const int n = 256;
  const auto f = sine_x(n);
  auto err = [&](double eps) { return (convolve(f, Kernel::bump(eps, n)) - f).sup_norm(); };
  EXPECT_NEAR(err(1.0 / 16) / err(1.0 / 32), 4.0, 0.2);
}

TEST(Convolve, ComposedKernelEqualsSuccessiveConvolution) {
  const int n = 64;
  const auto f = PeriodicGridField::sample(n, [](double x, double y) { return std::sin(2 * kPi * (x + 2 * y)); });
  const Kernel a = Kernel::bump(1.0 / 16, n), b = Kernel::bump(1.0 / 8, n);
  EXPECT_LT((convolve(convolve(f, a), b) - convolve(f, Kernel::compose(a, b))).sup_norm(), 1e-13);
}

TEST(Grid, ShiftMovesValues) {
  PeriodicGridField f(8, Rank::kScalar);
  f(1, 2) = 1.0;
  const auto g = f.shifted(3, -4);
  EXPECT_EQ(g(4, -2), 1.0);
}

TEST(GridIo, CsvRoundTripIsExact) {
  const auto f = PeriodicGridField::sample(16, [](double x, double y) { return std::sin(x) / (1.0 + y); });
  std::stringstream s;
  write_grid_document(s, f);
  const auto g = read_grid_document(s);
  ASSERT_EQ(g.resolution(), 16);
  EXPECT_EQ(g.raw(), f.raw());
}

TEST(GridIo, FormatDoubleRoundTrips) {
  test::Uniform rng(1);
  for (int q = 0; q < 1000; ++q) {
    const double v = std::ldexp(rng(-1.0, 1.0), static_cast<int>(rng(-40, 40)));
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(GridIo, FnvReferenceVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

}  // namespace
}  // namespace curvlab
