#pragma once

#include <array>
#include <memory>
#include <vector>

#include "curvlab/metric.hpp"
#include "curvlab/types.hpp"

namespace curvlab {

/// Point evaluation of a metric and its coordinate derivatives anywhere on
/// the torus.
class MetricField {
 public:
  virtual ~MetricField() = default;
  /// order 0: g only; 1: also dg; 2: also d2g.
  virtual LocalGeometry at(const Vec2& p, int order = 2) const = 0;
  /// Constant metric.
  virtual bool is_flat() const = 0;
  /// Bounds on the eigenvalues of g over the torus.
  virtual double eigen_lower_bound() const = 0;
  virtual double eigen_upper_bound() const = 0;
};

class AnalyticMetricField final : public MetricField {
 public:
  explicit AnalyticMetricField(MetricModel model);
  LocalGeometry at(const Vec2& p, int order = 2) const override;
  bool is_flat() const override { return flat_; }
  double eigen_lower_bound() const override { return lo_; }
  double eigen_upper_bound() const override { return hi_; }
  const MetricModel& model() const { return model_; }

 private:
  MetricModel model_;
  bool flat_;
  double lo_ = 1.0, hi_ = 1.0;
};

/// Periodic cubic (4x4 Lagrange) interpolation of the node values of g and
/// of its first and second derivatives.
class GridMetricField final : public MetricField {
 public:
  explicit GridMetricField(const SmoothedMetric& metric);
  LocalGeometry at(const Vec2& p, int order = 2) const override;
  bool is_flat() const override { return flat_; }
  double eigen_lower_bound() const override { return lo_; }
  double eigen_upper_bound() const override { return hi_; }
  int resolution() const { return n_; }

 private:
  static constexpr int kChannels = 18;
  int n_;
  bool flat_;
  double lo_, hi_;
  // channel-major: [channel][node]
  std::vector<double> data_;
};

}  // namespace curvlab
