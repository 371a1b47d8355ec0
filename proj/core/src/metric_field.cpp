#include "curvlab/metric_field.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "curvlab/error.hpp"

namespace curvlab {
namespace {

void eigen_range(const Mat2& g, double& lo, double& hi) {
  const Eigen::SelfAdjointEigenSolver<Mat2> es(g, Eigen::EigenvaluesOnly);
  lo = std::min(lo, es.eigenvalues()(0));
  hi = std::max(hi, es.eigenvalues()(1));
}

constexpr double kBoundSlack = 0.05;

}  // namespace

AnalyticMetricField::AnalyticMetricField(MetricModel model) : model_(std::move(model)) {
  if (!model_.has_expressions()) throw Error(ErrorCode::kUnsupported, "analytic field needs expressions");
  flat_ = model_.is_flat();
  lo_ = INFINITY;
  hi_ = 0.0;
  constexpr int kProbe = 64;
  for (int j = 0; j < kProbe; ++j)
    for (int i = 0; i < kProbe; ++i)
      eigen_range(model_.geometry_at(Vec2(double(i) / kProbe, double(j) / kProbe), 0).g, lo_, hi_);
  if (!flat_) {
    lo_ *= 1.0 - kBoundSlack;
    hi_ *= 1.0 + kBoundSlack;
  }
}

LocalGeometry AnalyticMetricField::at(const Vec2& p, int order) const {
  return model_.geometry_at(wrap_unit(p), order);
}

GridMetricField::GridMetricField(const SmoothedMetric& m) : n_(m.n) {
  const std::size_t nodes = static_cast<std::size_t>(n_) * n_;
  data_.assign(kChannels * nodes, 0.0);
  auto put = [&](int channel, const PeriodicGridField& f) {
    for (int c = 0, k = 0; c < 4; ++c) {
      if (c == 2) continue;
      const auto src = f.component(c);
      std::copy(src.begin(), src.end(), data_.begin() + (channel + k) * nodes);
      ++k;
    }
  };
  put(0, m.g);
  put(3, m.dg[0]);
  put(6, m.dg[1]);
  for (int s = 0; s < 3; ++s) put(9 + 3 * s, m.d2g[s]);

  lo_ = INFINITY;
  hi_ = 0.0;
  flat_ = true;
  const Mat2 g0 = m.g.matrix(0, 0);
  for (int j = 0; j < n_; ++j)
    for (int i = 0; i < n_; ++i) {
      const Mat2 g = m.g.matrix(i, j);
      eigen_range(g, lo_, hi_);
      if (g != g0) flat_ = false;
    }
  for (std::size_t k = 3 * nodes; k < data_.size() && flat_; ++k)
    if (data_[k] != 0.0) flat_ = false;
  if (!flat_) {
    lo_ *= 1.0 - kBoundSlack;
    hi_ *= 1.0 + kBoundSlack;
  }
}

LocalGeometry GridMetricField::at(const Vec2& p, int order) const {
  const double sx = wrap_unit(p.x()) * n_;
  const double sy = wrap_unit(p.y()) * n_;
  const int i0 = static_cast<int>(std::floor(sx));
  const int j0 = static_cast<int>(std::floor(sy));
  auto weights = [](double t, double w[4]) {
    w[0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
    w[1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    w[2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
    w[3] = (t + 1.0) * t * (t - 1.0) / 6.0;
  };
  double wx[4], wy[4];
  weights(sx - i0, wx);
  weights(sy - j0, wy);
  const int channels = order >= 2 ? 18 : (order == 1 ? 9 : 3);
  double acc[kChannels] = {};
  const std::size_t nodes = static_cast<std::size_t>(n_) * n_;
  for (int b = 0; b < 4; ++b) {
    int j = (j0 - 1 + b) % n_;
    if (j < 0) j += n_;
    for (int a = 0; a < 4; ++a) {
      int i = (i0 - 1 + a) % n_;
      if (i < 0) i += n_;
      const double w = wx[a] * wy[b];
      const std::size_t k = static_cast<std::size_t>(j) * n_ + i;
      for (int c = 0; c < channels; ++c) acc[c] += w * data_[c * nodes + k];
    }
  }
  auto mat = [&](int c) {
    Mat2 m;
    m << acc[c], acc[c + 1], acc[c + 1], acc[c + 2];
    return m;
  };
  LocalGeometry out;
  out.g = mat(0);
  if (order >= 1) {
    out.dg[0] = mat(3);
    out.dg[1] = mat(6);
  }
  if (order >= 2)
    for (int s = 0; s < 3; ++s) out.d2g[s] = mat(9 + 3 * s);
  return out;
}

}  // namespace curvlab
