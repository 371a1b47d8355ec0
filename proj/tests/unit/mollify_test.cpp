#include <gtest/gtest.h>

#include "curvlab/error.hpp"
#include "curvlab/mollify.hpp"
#include "models.hpp"

namespace curvlab {
namespace {

const std::vector<double> kSweep{1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};

TEST(SequenceConverges, RatioAndInversions) {
  EXPECT_TRUE(sequence_converges({1.0, 0.5, 0.3, 0.2}));
  EXPECT_FALSE(sequence_converges({1.0, 0.5, 0.4, 0.3}));
  EXPECT_TRUE(sequence_converges({1.0, 1.1, 0.3, 0.2}));
  EXPECT_FALSE(sequence_converges({1.0, 1.1, 0.3, 0.4, 0.2}));
  EXPECT_TRUE(sequence_converges({1e-17, 2e-17, 1e-17}));
}

TEST(Friedrichs, SmoothCoefficientsConverge) {
  const auto r = friedrichs_norms(parse_field("exp(sin(2*pi*x))"), parse_field("cos(2*pi*(x + y))"), kSweep, 256);
  EXPECT_TRUE(r.converges());
  // smooth coefficients: the commutator is O(eps^2)
  EXPECT_NEAR(r.c0[1] / r.c0[2], 4.0, 0.5);
  EXPECT_FALSE(to_csv(r).empty());
}

TEST(Friedrichs, LipschitzCoefficientConverges) {
  const auto r = friedrichs_norms(parse_field(test::kGluedU), parse_field("sin(2*pi*x)"), kSweep, 256);
  EXPECT_TRUE(r.converges());
}

TEST(Commutators, ConformalSmoothNormsDecrease) {
  const MetricModel m = test::conformal_model().sampled(128);
  EXPECT_TRUE(ricci_commutator_norms(m, kSweep).decreasing());
  const auto p = pairing_commutator_norms(m, {parse_field("1"), parse_field("0")}, {parse_field("1"), parse_field("0")},
                                          kSweep);
  EXPECT_TRUE(p.ricci.decreasing());
  EXPECT_TRUE(p.metric.decreasing());
}

TEST(Commutators, GluedSecondDifferenceNormDecreases) {
  const MetricModel m = test::glued_model().sampled(256);
  const auto p = pairing_commutator_norms(m, {parse_field("1"), parse_field("0.5*sin(2*pi*y)")},
                                          {parse_field("cos(2*pi*x)"), parse_field("1")}, kSweep);
  EXPECT_TRUE(p.metric.converges());
  EXPECT_TRUE(p.ricci.converges());
  EXPECT_TRUE(inverse_deviation(m, kSweep).converges());
}

TEST(Commutators, RejectsC1Models) {
  const MetricModel m = MetricModel::conformal(parse_field("0.1*sin(2*pi*x)*abs(sin(2*pi*x))"), Regularity::kC1).sampled(64);
  EXPECT_THROW(ricci_commutator_norms(m, kSweep), Error);
}

}  // namespace
}  // namespace curvlab
