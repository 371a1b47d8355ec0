#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "curvlab/types.hpp"

namespace curvlab {

enum class Rank { kScalar, kVector, kMatrix };

int component_count(Rank rank);
const char* to_string(Rank rank);
Rank rank_from_string(const std::string& name);

/// Samples on the uniform N x N grid over [0,1)^2. Node (i, j) sits at
/// (i/N, j/N); i runs along x. Values are stored component-major, and index
/// arithmetic wraps modulo N in both directions.
class PeriodicGridField {
 public:
  PeriodicGridField() = default;
  PeriodicGridField(int n, Rank rank, double fill = 0.0);

  /// Scalar field from f(x, y) evaluated at the nodes.
  static PeriodicGridField sample(int n, const std::function<double(double, double)>& f);

  int resolution() const { return n_; }
  double spacing() const { return 1.0 / n_; }
  Rank rank() const { return rank_; }
  int components() const { return component_count(rank_); }
  std::size_t node_count() const { return static_cast<std::size_t>(n_) * n_; }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(wrap(j)) * n_ + wrap(i);
  }
  int wrap(int i) const {
    const int r = i % n_;
    return r < 0 ? r + n_ : r;
  }

  double& operator()(int i, int j, int comp = 0) { return data_[offset(comp) + index(i, j)]; }
  double operator()(int i, int j, int comp = 0) const { return data_[offset(comp) + index(i, j)]; }

  std::span<double> component(int comp) { return {data_.data() + offset(comp), node_count()}; }
  std::span<const double> component(int comp) const {
    return {data_.data() + offset(comp), node_count()};
  }

  /// Matrix-ranked value at a node, components stored row-major.
  Mat2 matrix(int i, int j) const;
  void set_matrix(int i, int j, const Mat2& m);

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool all_finite() const;
  /// Largest |m12 - m21| over nodes of a matrix field.
  double symmetry_defect() const;

  /// Field shifted by (di, dj) nodes: out(i, j) = in(i - di, j - dj).
  PeriodicGridField shifted(int di, int dj) const;

  PeriodicGridField& operator+=(const PeriodicGridField& other);
  PeriodicGridField& operator-=(const PeriodicGridField& other);
  PeriodicGridField& operator*=(double s);

  /// Max over nodes and components of |value|.
  double sup_norm() const;

 private:
  std::size_t offset(int comp) const { return static_cast<std::size_t>(comp) * node_count(); }

  int n_ = 0;
  Rank rank_ = Rank::kScalar;
  std::vector<double> data_;
};

PeriodicGridField operator-(PeriodicGridField a, const PeriodicGridField& b);
PeriodicGridField operator+(PeriodicGridField a, const PeriodicGridField& b);

/// Which derivative of the mollifier a kernel samples.
enum class KernelDerivative { kNone, kX, kY, kXX, kXY, kYY };

/// Discrete mollifier on the grid stencil |offset| < eps. The value kernel is
/// non-negative with unit discrete mass; derivative kernels are renormalized
/// so their first (or second) moments match the continuum identities.
class Kernel {
 public:
  /// Standard bump exp(-1/(1-|z|^2)) scaled to radius eps.
  static Kernel bump(double eps, int n, KernelDerivative derivative = KernelDerivative::kNone);

  /// Discrete convolution of two kernels (same resolution).
  static Kernel compose(const Kernel& a, const Kernel& b);

  int resolution() const { return n_; }
  double eps() const { return eps_; }
  int radius_nodes() const { return radius_; }
  KernelDerivative derivative() const { return derivative_; }
  /// Weight at node offset (a, b), |a|,|b| <= radius_nodes().
  double weight(int a, int b) const {
    return weights_[static_cast<std::size_t>(b + radius_) * width() + (a + radius_)];
  }
  double mass() const;

 private:
  Kernel(int n, double eps, int radius, KernelDerivative d)
      : n_(n), eps_(eps), radius_(radius), derivative_(d),
        weights_(static_cast<std::size_t>(2 * radius + 1) * (2 * radius + 1), 0.0) {}
  int width() const { return 2 * radius_ + 1; }
  double& weight_ref(int a, int b) {
    return weights_[static_cast<std::size_t>(b + radius_) * width() + (a + radius_)];
  }

  int n_;
  double eps_;
  int radius_;
  KernelDerivative derivative_;
  std::vector<double> weights_;
};

/// Componentwise periodic convolution, out(p) = sum_q k(q) f(p - q).
PeriodicGridField convolve(const PeriodicGridField& field, const Kernel& kernel);

enum class Axis { kX, kY };
enum class DiffScheme { kCentral2, kCentral4 };

PeriodicGridField finite_diff(const PeriodicGridField& field, Axis axis,
                              DiffScheme scheme = DiffScheme::kCentral4);

/// Rectangle rule: sum field * weight * h^2 over nodes (scalar fields).
double integrate(const PeriodicGridField& field, const PeriodicGridField& weight);
double integrate(const PeriodicGridField& field);

/// Pointwise product of two scalar fields.
PeriodicGridField multiply(const PeriodicGridField& a, const PeriodicGridField& b);

}  // namespace curvlab
