#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace curvlab::test {

// Dense two-phase simplex with Bland's rule: min c.x, A x = b, x >= 0, b >= 0.
// Slow and simple on purpose; used only as an oracle on small problems.
class DenseSimplex {
 public:
  using Real = long double;

  DenseSimplex(std::vector<std::vector<Real>> a, std::vector<Real> b, std::vector<Real> c)
      : m_(a.size()), n_(c.size()), c_(std::move(c)) {
    cols_ = n_ + m_;
    t_.assign(m_, std::vector<Real>(cols_ + 1, 0.0L));
    basis_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) t_[i][j] = a[i][j];
      t_[i][n_ + i] = 1.0L;
      t_[i][cols_] = b[i];
      basis_[i] = n_ + i;
    }
  }

  Real solve() {
    std::vector<Real> phase1(cols_, 0.0L);
    for (std::size_t j = n_; j < cols_; ++j) phase1[j] = 1.0L;
    run(phase1, cols_);
    if (objective(phase1) > 1e-12L) throw std::runtime_error("infeasible");
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      for (std::size_t j = 0; j < n_; ++j)
        if (std::fabs(t_[i][j]) > kEps) {
          pivot(i, j);
          break;
        }
    }
    std::vector<Real> phase2(cols_, 0.0L);
    for (std::size_t j = 0; j < n_; ++j) phase2[j] = c_[j];
    run(phase2, n_);
    return objective(phase2);
  }

  std::vector<Real> solution() const {
    std::vector<Real> x(n_, 0.0L);
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) x[basis_[i]] = t_[i][cols_];
    return x;
  }

 private:
  static constexpr Real kEps = 1e-14L;

  Real objective(const std::vector<Real>& cost) const {
    Real z = 0.0L;
    for (std::size_t i = 0; i < m_; ++i) z += cost[basis_[i]] * t_[i][cols_];
    return z;
  }

  void run(const std::vector<Real>& cost, std::size_t allowed) {
    for (;;) {
      std::size_t enter = allowed;
      for (std::size_t j = 0; j < allowed && enter == allowed; ++j) {
        Real d = cost[j];
        for (std::size_t i = 0; i < m_; ++i) d -= cost[basis_[i]] * t_[i][j];
        if (d < -1e-13L) enter = j;
      }
      if (enter == allowed) return;
      std::size_t leave = m_;
      Real best = std::numeric_limits<Real>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        if (t_[i][enter] <= kEps) continue;
        const Real r = t_[i][cols_] / t_[i][enter];
        if (r < best - 1e-18L || (std::fabs(r - best) <= 1e-18L && basis_[i] < basis_[leave])) {
          best = r;
          leave = i;
        }
      }
      if (leave == m_) throw std::runtime_error("unbounded");
      pivot(leave, enter);
    }
  }

  void pivot(std::size_t r, std::size_t c) {
    const Real p = t_[r][c];
    for (auto& v : t_[r]) v /= p;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const Real f = t_[i][c];
      if (f == 0.0L) continue;
      for (std::size_t j = 0; j <= cols_; ++j) t_[i][j] -= f * t_[r][j];
    }
    basis_[r] = c;
  }

  std::size_t m_, n_, cols_;
  std::vector<Real> c_;
  std::vector<std::vector<Real>> t_;
  std::vector<std::size_t> basis_;
};

// Optimal value of the transport LP between weights a and b for the dense cost.
template <typename Matrix>
double transport_lp_value(const std::vector<double>& a, const std::vector<double>& b, const Matrix& cost) {
  const std::size_t m = a.size(), n = b.size();
  std::vector<std::vector<long double>> rows(m + n, std::vector<long double>(m * n, 0.0L));
  std::vector<long double> rhs(m + n), c(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      rows[i][i * n + j] = 1.0L;
      rows[m + j][i * n + j] = 1.0L;
      c[i * n + j] = cost(i, j);
    }
  for (std::size_t i = 0; i < m; ++i) rhs[i] = a[i];
  for (std::size_t j = 0; j < n; ++j) rhs[m + j] = b[j];
  DenseSimplex lp(rows, rhs, c);
  return static_cast<double>(lp.solve());
}

}  // namespace curvlab::test
