#include "curvlab/grid.hpp"

#include <algorithm>
#include <cmath>

#include "curvlab/error.hpp"
#include "curvlab/parallel.hpp"

namespace curvlab {

int component_count(Rank rank) {
  switch (rank) {
    case Rank::kScalar: return 1;
    case Rank::kVector: return 2;
    case Rank::kMatrix: return 4;
  }
  return 1;
}

const char* to_string(Rank rank) {
  switch (rank) {
    case Rank::kScalar: return "scalar";
    case Rank::kVector: return "vector";
    case Rank::kMatrix: return "matrix";
  }
  return "scalar";
}

Rank rank_from_string(const std::string& name) {
  if (name == "scalar") return Rank::kScalar;
  if (name == "vector") return Rank::kVector;
  if (name == "matrix") return Rank::kMatrix;
  throw Error(ErrorCode::kInvalidArgument, "unknown field rank '" + name + "'");
}

PeriodicGridField::PeriodicGridField(int n, Rank rank, double fill)
    : n_(n), rank_(rank) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "grid resolution must be positive");
  data_.assign(static_cast<std::size_t>(component_count(rank)) * node_count(), fill);
}

PeriodicGridField PeriodicGridField::sample(int n, const std::function<double(double, double)>& f) {
  PeriodicGridField out(n, Rank::kScalar);
  const double h = 1.0 / n;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) out(i, j) = f(i * h, j * h);
  return out;
}

Mat2 PeriodicGridField::matrix(int i, int j) const {
  const std::size_t k = index(i, j);
  const std::size_t s = node_count();
  Mat2 m;
  m << data_[k], data_[s + k], data_[2 * s + k], data_[3 * s + k];
  return m;
}

void PeriodicGridField::set_matrix(int i, int j, const Mat2& m) {
  const std::size_t k = index(i, j);
  const std::size_t s = node_count();
  data_[k] = m(0, 0);
  data_[s + k] = m(0, 1);
  data_[2 * s + k] = m(1, 0);
  data_[3 * s + k] = m(1, 1);
}

bool PeriodicGridField::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double PeriodicGridField::symmetry_defect() const {
  if (rank_ != Rank::kMatrix) return 0.0;
  double worst = 0.0;
  const std::size_t s = node_count();
  for (std::size_t k = 0; k < s; ++k) worst = std::max(worst, std::abs(data_[s + k] - data_[2 * s + k]));
  return worst;
}

PeriodicGridField PeriodicGridField::shifted(int di, int dj) const {
  PeriodicGridField out(n_, rank_);
  for (int c = 0; c < components(); ++c)
    for (int j = 0; j < n_; ++j)
      for (int i = 0; i < n_; ++i) out(i, j, c) = (*this)(i - di, j - dj, c);
  return out;
}

PeriodicGridField& PeriodicGridField::operator+=(const PeriodicGridField& other) {
  if (other.n_ != n_ || other.rank_ != rank_)
    throw Error(ErrorCode::kInvalidArgument, "field shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

PeriodicGridField& PeriodicGridField::operator-=(const PeriodicGridField& other) {
  if (other.n_ != n_ || other.rank_ != rank_)
    throw Error(ErrorCode::kInvalidArgument, "field shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

PeriodicGridField& PeriodicGridField::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

double PeriodicGridField::sup_norm() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

PeriodicGridField operator-(PeriodicGridField a, const PeriodicGridField& b) { return a -= b; }
PeriodicGridField operator+(PeriodicGridField a, const PeriodicGridField& b) { return a += b; }

namespace {

// Bump exp(-1/(1-s)) with s = |z|^2 and its first two derivatives in z.
struct BumpSample {
  double value = 0.0;
  double dx = 0.0, dy = 0.0;
  double dxx = 0.0, dxy = 0.0, dyy = 0.0;
};

BumpSample bump_at(double zx, double zy) {
  BumpSample out;
  const double s = zx * zx + zy * zy;
  if (s >= 1.0) return out;
  const double q = 1.0 - s;
  const double rho = std::exp(-1.0 / q);
  const double q2 = q * q;
  out.value = rho;
  out.dx = -2.0 * zx * rho / q2;
  out.dy = -2.0 * zy * rho / q2;
  const double c = 4.0 * rho * (1.0 / (q2 * q2) - 2.0 / (q2 * q));
  out.dxx = -2.0 * rho / q2 + c * zx * zx;
  out.dyy = -2.0 * rho / q2 + c * zy * zy;
  out.dxy = c * zx * zy;
  return out;
}

}  // namespace

Kernel Kernel::bump(double eps, int n, KernelDerivative derivative) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "kernel radius must be positive");
  if (eps >= 0.5) throw Error(ErrorCode::kKernelExceedsChart, "kernel exceeds chart");
  const double h = 1.0 / n;
  const int radius = static_cast<int>(std::ceil(eps / h - 1e-12));
  Kernel k(n, eps, radius, derivative);
  Kernel base(n, eps, radius, KernelDerivative::kNone);

  double raw_mass = 0.0;
  for (int b = -radius; b <= radius; ++b) {
    for (int a = -radius; a <= radius; ++a) {
      const BumpSample s = bump_at(a * h / eps, b * h / eps);
      raw_mass += s.value;
      base.weight_ref(a, b) = s.value;
      double w = 0.0;
      switch (derivative) {
        case KernelDerivative::kNone: w = s.value; break;
        case KernelDerivative::kX: w = s.dx; break;
        case KernelDerivative::kY: w = s.dy; break;
        case KernelDerivative::kXX: w = s.dxx; break;
        case KernelDerivative::kXY: w = s.dxy; break;
        case KernelDerivative::kYY: w = s.dyy; break;
      }
      k.weight_ref(a, b) = w;
    }
  }
  if (!(raw_mass > 0.0)) throw Error(ErrorCode::kInvalidArgument, "kernel has no mass on the grid");
  for (double& w : base.weights_) w /= raw_mass;

  auto moment = [&](const Kernel& kk, int px, int py) {
    double m = 0.0;
    for (int b = -radius; b <= radius; ++b)
      for (int a = -radius; a <= radius; ++a)
        m += std::pow(a * h, px) * std::pow(b * h, py) * kk.weight(a, b);
    return m;
  };
  auto rescale = [&](double current, double target) {
    if (std::abs(current) < 1e-300)
      throw Error(ErrorCode::kInvalidArgument,
                  "kernel radius too small for a derivative kernel at this resolution");
    const double f = target / current;
    for (double& w : k.weights_) w *= f;
  };

  switch (derivative) {
    case KernelDerivative::kNone:
      k.weights_ = base.weights_;
      break;
    case KernelDerivative::kX: rescale(moment(k, 1, 0), -1.0); break;
    case KernelDerivative::kY: rescale(moment(k, 0, 1), -1.0); break;
    case KernelDerivative::kXY: rescale(moment(k, 1, 1), 1.0); break;
    case KernelDerivative::kXX:
    case KernelDerivative::kYY: {
      // Remove the discrete zeroth moment, then fix the second moment.
      double mass = 0.0;
      for (double w : k.weights_) mass += w;
      for (std::size_t t = 0; t < k.weights_.size(); ++t) k.weights_[t] -= mass * base.weights_[t];
      const bool xx = derivative == KernelDerivative::kXX;
      rescale(moment(k, xx ? 2 : 0, xx ? 0 : 2), 2.0);
      break;
    }
  }
  return k;
}

Kernel Kernel::compose(const Kernel& a, const Kernel& b) {
  if (a.n_ != b.n_) throw Error(ErrorCode::kInvalidArgument, "kernel resolution mismatch");
  const int radius = a.radius_ + b.radius_;
  if (2 * radius + 1 > a.n_) throw Error(ErrorCode::kKernelExceedsChart, "kernel exceeds chart");
  const KernelDerivative d =
      a.derivative_ == KernelDerivative::kNone ? b.derivative_ : a.derivative_;
  Kernel out(a.n_, a.eps_ + b.eps_, radius, d);
  for (int qb = -a.radius_; qb <= a.radius_; ++qb)
    for (int qa = -a.radius_; qa <= a.radius_; ++qa) {
      const double wa = a.weight(qa, qb);
      if (wa == 0.0) continue;
      for (int rb = -b.radius_; rb <= b.radius_; ++rb)
        for (int ra = -b.radius_; ra <= b.radius_; ++ra)
          out.weight_ref(qa + ra, qb + rb) += wa * b.weight(ra, rb);
    }
  return out;
}

double Kernel::mass() const {
  double m = 0.0;
  for (double w : weights_) m += w;
  return m;
}

PeriodicGridField convolve(const PeriodicGridField& field, const Kernel& kernel) {
  const int n = field.resolution();
  if (kernel.resolution() != n)
    throw Error(ErrorCode::kInvalidArgument, "kernel sampled at a different resolution");
  if (kernel.eps() >= 0.5) throw Error(ErrorCode::kKernelExceedsChart, "kernel exceeds chart");

  struct Tap {
    int a, b;
    double w;
  };
  std::vector<Tap> taps;
  const int r = kernel.radius_nodes();
  for (int b = -r; b <= r; ++b)
    for (int a = -r; a <= r; ++a)
      if (const double w = kernel.weight(a, b); w != 0.0) taps.push_back({a, b, w});

  PeriodicGridField out(n, field.rank());
  for (int c = 0; c < field.components(); ++c) {
    const std::span<const double> src = field.component(c);
    std::span<double> dst = out.component(c);
    parallel_for(n, [&](std::ptrdiff_t jj) {
      const int j = static_cast<int>(jj);
      double* row = dst.data() + static_cast<std::size_t>(j) * n;
      for (const Tap& t : taps) {
        const int sj = ((j - t.b) % n + n) % n;
        const double* srow = src.data() + static_cast<std::size_t>(sj) * n;
        // out[i] += w * src[i - a], split where i - a wraps.
        const int shift = ((t.a % n) + n) % n;
        for (int i = 0; i < shift; ++i) row[i] += t.w * srow[i - shift + n];
        for (int i = shift; i < n; ++i) row[i] += t.w * srow[i - shift];
      }
    });
  }
  return out;
}

PeriodicGridField finite_diff(const PeriodicGridField& field, Axis axis, DiffScheme scheme) {
  const int n = field.resolution();
  if (n < 8) throw Error(ErrorCode::kInvalidArgument, "finite_diff requires N >= 8");
  const double h = field.spacing();
  const int di = axis == Axis::kX ? 1 : 0;
  const int dj = axis == Axis::kY ? 1 : 0;
  PeriodicGridField out(n, field.rank());
  for (int c = 0; c < field.components(); ++c)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double fp1 = field(i + di, j + dj, c);
        const double fm1 = field(i - di, j - dj, c);
        if (scheme == DiffScheme::kCentral2) {
          out(i, j, c) = (fp1 - fm1) / (2.0 * h);
        } else {
          const double fp2 = field(i + 2 * di, j + 2 * dj, c);
          const double fm2 = field(i - 2 * di, j - 2 * dj, c);
          out(i, j, c) = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
        }
      }
  return out;
}

double integrate(const PeriodicGridField& field, const PeriodicGridField& weight) {
  if (field.resolution() != weight.resolution())
    throw Error(ErrorCode::kInvalidArgument, "integrate: resolution mismatch");
  const double h = field.spacing();
  const auto f = field.component(0);
  const auto w = weight.component(0);
  double sum = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) sum += f[k] * w[k];
  return sum * h * h;
}

double integrate(const PeriodicGridField& field) {
  const double h = field.spacing();
  double sum = 0.0;
  for (double v : field.component(0)) sum += v;
  return sum * h * h;
}

PeriodicGridField multiply(const PeriodicGridField& a, const PeriodicGridField& b) {
  if (a.resolution() != b.resolution())
    throw Error(ErrorCode::kInvalidArgument, "multiply: resolution mismatch");
  PeriodicGridField out(a.resolution(), Rank::kScalar);
  const auto x = a.component(0);
  const auto y = b.component(0);
  auto z = out.component(0);
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = x[k] * y[k];
  return out;
}

}  // namespace curvlab
