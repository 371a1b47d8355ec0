#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "curvlab/error.hpp"
#include "curvlab/io.hpp"
#include "curvlab/transport.hpp"

namespace curvlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_marginals(const std::vector<double>& a, const std::vector<double>& b, const Eigen::MatrixXd& cost,
                     std::size_t cap) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kInvalidArgument, "transport: empty marginal");
  if (static_cast<Eigen::Index>(a.size()) != cost.rows() || static_cast<Eigen::Index>(b.size()) != cost.cols())
    throw Error(ErrorCode::kInvalidArgument, "transport: cost shape does not match marginals");
  if (a.size() > cap || b.size() > cap)
    throw Error(ErrorCode::kCapExceeded, "transport: support exceeds cap " + std::to_string(cap));
  double sa = 0.0, sb = 0.0;
  for (double w : a) {
    if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "transport: negative weight");
    sa += w;
  }
  for (double w : b) {
    if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "transport: negative weight");
    sb += w;
  }
  if (std::abs(sa - sb) > 1e-9)
    throw Error(ErrorCode::kInfeasible, "transport: marginal masses differ (" + format_double(sa) + " vs " +
                                            format_double(sb) + ")");
}

double log_sum_exp(const double* z, std::size_t n, std::size_t stride) {
  double mx = -kInf;
  for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, z[k * stride]);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::exp(z[k * stride] - mx);
  return mx + std::log(s);
}

}  // namespace

ExactSolution solve_exact(const std::vector<double>& a, const std::vector<double>& b, const Eigen::MatrixXd& cost,
                          std::size_t cap) {
  check_marginals(a, b, cost, cap);
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  const double tol = 1e-15;
  std::vector<double> supply = a, demand = b;
  // positive flows per column: (row, amount)
  std::vector<std::vector<std::pair<int, double>>> flow(m);
  std::vector<double> u(n, 0.0), v(m);
  for (int j = 0; j < m; ++j) v[j] = cost.col(j).minCoeff();

  std::vector<double> dr(n), dc(m);
  std::vector<int> pr(n), pc(m);
  std::vector<char> doner(n), donec(m);
  auto flow_at = [&](int i, int j) -> double* {
    for (auto& e : flow[j])
      if (e.first == i) return &e.second;
    return nullptr;
  };

  for (;;) {
    int start_count = 0;
    for (int i = 0; i < n; ++i) start_count += supply[i] > tol;
    if (start_count == 0) break;
    std::fill(dr.begin(), dr.end(), kInf);
    std::fill(dc.begin(), dc.end(), kInf);
    std::fill(doner.begin(), doner.end(), 0);
    std::fill(donec.begin(), donec.end(), 0);
    for (int i = 0; i < n; ++i)
      if (supply[i] > tol) {
        dr[i] = 0.0;
        pr[i] = -1;
      }
    int end = -1;
    double big_d = kInf;
    for (;;) {
      // select the closest unfinished node, rows before columns on ties
      int best = -1;
      bool is_row = true;
      double bd = kInf;
      for (int i = 0; i < n; ++i)
        if (!doner[i] && dr[i] < bd) {
          bd = dr[i];
          best = i;
        }
      for (int j = 0; j < m; ++j)
        if (!donec[j] && dc[j] < bd) {
          bd = dc[j];
          best = j;
          is_row = false;
        }
      if (best < 0) break;
      if (is_row) {
        doner[best] = 1;
        for (int j = 0; j < m; ++j) {
          if (donec[j]) continue;
          const double r = std::max(0.0, cost(best, j) - u[best] - v[j]);
          const double d = dr[best] + r;
          if (d < dc[j]) {
            dc[j] = d;
            pc[j] = best;
          }
        }
      } else {
        donec[best] = 1;
        if (demand[best] > tol) {
          end = best;
          big_d = dc[best];
          break;
        }
        for (const auto& [i, x] : flow[best]) {
          if (x <= 0.0 || doner[i]) continue;
          if (dc[best] < dr[i]) {
            dr[i] = dc[best];
            pr[i] = best;
          }
        }
      }
    }
    if (end < 0) throw Error(ErrorCode::kInfeasible, "transport: no augmenting path");
    for (int i = 0; i < n; ++i) u[i] -= std::min(dr[i], big_d);
    for (int j = 0; j < m; ++j) v[j] += std::min(dc[j], big_d);

    // bottleneck along the path
    double amount = demand[end];
    int j = end;
    for (;;) {
      const int i = pc[j];
      if (pr[i] < 0) {
        amount = std::min(amount, supply[i]);
        break;
      }
      amount = std::min(amount, *flow_at(i, pr[i]));
      j = pr[i];
    }
    j = end;
    demand[end] -= amount;
    for (;;) {
      const int i = pc[j];
      if (double* x = flow_at(i, j))
        *x += amount;
      else
        flow[j].push_back({i, amount});
      if (pr[i] < 0) {
        supply[i] -= amount;
        break;
      }
      const int jb = pr[i];
      double* xb = flow_at(i, jb);
      *xb -= amount;
      if (*xb <= tol) {
        auto& col = flow[jb];
        col.erase(std::remove_if(col.begin(), col.end(), [&](const auto& e) { return e.first == i; }), col.end());
      }
      j = jb;
    }
  }

  ExactSolution sol;
  sol.plan.rows = n;
  sol.plan.cols = m;
  for (int j = 0; j < m; ++j)
    for (const auto& [i, x] : flow[j])
      if (x > 0.0) sol.plan.entries.push_back({i, j, x});
  std::sort(sol.plan.entries.begin(), sol.plan.entries.end(),
            [](const PlanEntry& p, const PlanEntry& q) { return p.i != q.i ? p.i < q.i : p.j < q.j; });
  for (const auto& e : sol.plan.entries) sol.plan.cost += e.weight * cost(e.i, e.j);

  sol.duals.psi = u;
  sol.duals.psi_c = c_transform(u, cost);
  for (int jj = 0; jj < m; ++jj) {
    for (int i = 0; i < n; ++i)
      while (u[i] + sol.duals.psi_c[jj] > cost(i, jj))
        sol.duals.psi_c[jj] = std::nextafter(sol.duals.psi_c[jj], -kInf);
  }
  for (int i = 0; i < n; ++i) sol.duals.value += a[i] * u[i];
  for (int jj = 0; jj < m; ++jj) sol.duals.value += b[jj] * sol.duals.psi_c[jj];
  sol.gap = std::abs(sol.duals.value - sol.plan.cost);
  return sol;
}

ExactSolution solve_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Eigen::MatrixXd& cost,
                          std::size_t cap) {
  mu.validate();
  nu.validate();
  return solve_exact(mu.weights, nu.weights, cost, cap);
}

SinkhornSolution solve_sinkhorn(const std::vector<double>& a, const std::vector<double>& b,
                                const Eigen::MatrixXd& cost, double reg, int max_iterations, double tolerance) {
  if (!(reg > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sinkhorn: regularization must be positive");
  check_marginals(a, b, cost, std::numeric_limits<std::size_t>::max());
  const std::size_t n = a.size(), m = b.size();
  std::vector<double> la(n), lb(m);
  for (std::size_t i = 0; i < n; ++i) la[i] = a[i] > 0.0 ? std::log(a[i]) : -kInf;
  for (std::size_t j = 0; j < m; ++j) lb[j] = b[j] > 0.0 ? std::log(b[j]) : -kInf;
  SinkhornSolution sol;
  sol.f.assign(n, 0.0);
  sol.g.assign(m, 0.0);
  // z is column-major like cost: z(i, j) at i + j n
  Eigen::MatrixXd z(n, m);
  auto row_error = [&]() {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += std::exp((sol.f[i] + sol.g[j] - cost(i, j)) / reg);
      worst = std::max(worst, std::abs(s - a[i]));
    }
    return worst;
  };
  int it = 0;
  for (; it < max_iterations; ++it) {
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < n; ++i) z(i, j) = (sol.g[j] - cost(i, j)) / reg;
    for (std::size_t i = 0; i < n; ++i)
      sol.f[i] = a[i] > 0.0 ? reg * (la[i] - log_sum_exp(z.data() + i, m, n)) : -kInf;
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < n; ++i) z(i, j) = (sol.f[i] - cost(i, j)) / reg;
    for (std::size_t j = 0; j < m; ++j)
      sol.g[j] = b[j] > 0.0 ? reg * (lb[j] - log_sum_exp(z.data() + j * n, n, 1)) : -kInf;
    if (it % 10 == 9 || it + 1 == max_iterations) {
      sol.marginal_error = row_error();
      if (sol.marginal_error <= tolerance) {
        sol.converged = true;
        ++it;
        break;
      }
    }
  }
  sol.iterations = it;
  sol.plan.rows = static_cast<int>(n);
  sol.plan.cols = static_cast<int>(m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double p = std::exp((sol.f[i] + sol.g[j] - cost(i, j)) / reg);
      if (p > 0.0) {
        sol.plan.entries.push_back({static_cast<int>(i), static_cast<int>(j), p});
        sol.plan.cost += p * cost(i, j);
      }
    }
  sol.marginal_error = sol.plan.marginal_error(a, b);
  return sol;
}

WassersteinResult wasserstein2_detail(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const MetricField& metric,
                                      std::size_t cap) {
  mu.validate();
  nu.validate();
  const Eigen::MatrixXd cost = cost_matrix(metric, mu.points, nu.points);
  WassersteinResult r;
  if (mu.size() <= cap && nu.size() <= cap) {
    r.value = std::sqrt(std::max(0.0, 2.0 * solve_exact(mu.weights, nu.weights, cost, cap).plan.cost));
    r.source = "exact";
    return r;
  }
  // Richardson step in the regularization: 2 c(reg / 2) - c(reg)
  const double reg = 1e-3 * std::max(cost.maxCoeff(), 1e-12);
  const double c1 = solve_sinkhorn(mu.weights, nu.weights, cost, reg).plan.cost;
  const double c2 = solve_sinkhorn(mu.weights, nu.weights, cost, 0.5 * reg).plan.cost;
  r.value = std::sqrt(std::max(0.0, 2.0 * (2.0 * c2 - c1)));
  r.source = "sinkhorn";
  return r;
}

double wasserstein2(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const MetricField& metric) {
  return wasserstein2_detail(mu, nu, metric).value;
}

}  // namespace curvlab
