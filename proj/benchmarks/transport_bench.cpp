#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include "curvlab/expr.hpp"
#include "curvlab/geodesic.hpp"
#include "curvlab/metric.hpp"
#include "curvlab/metric_field.hpp"
#include "curvlab/transport.hpp"

namespace {

using namespace curvlab;

struct Instance {
  std::vector<double> a, b;
  Eigen::MatrixXd cost;
};

Instance flat_instance(int m) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> x(m), y(m);
  for (auto& p : x) p = Vec2(u(rng), u(rng));
  for (auto& p : y) p = Vec2(u(rng), u(rng));
  Instance ins{std::vector<double>(m), std::vector<double>(m), Eigen::MatrixXd(m, m)};
  double sa = 0.0, sb = 0.0;
  for (int i = 0; i < m; ++i) sa += ins.a[i] = 0.5 + u(rng);
  for (int j = 0; j < m; ++j) sb += ins.b[j] = 0.5 + u(rng);
  for (int i = 0; i < m; ++i) {
    ins.a[i] /= sa;
    ins.b[i] /= sb;
    for (int j = 0; j < m; ++j) ins.cost(i, j) = 0.5 * std::pow(flat_torus_distance(x[i], y[j]), 2);
  }
  return ins;
}

void BM_Exact(benchmark::State& state) {
  const Instance ins = flat_instance(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_exact(ins.a, ins.b, ins.cost));
}
BENCHMARK(BM_Exact)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Sinkhorn(benchmark::State& state) {
  const Instance ins = flat_instance(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_sinkhorn(ins.a, ins.b, ins.cost, 1e-2));
}
BENCHMARK(BM_Sinkhorn)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_ConformalCostMatrix(benchmark::State& state) {
  const AnalyticMetricField field(MetricModel::conformal(parse_field("0.05*sin(2*pi*x)*sin(2*pi*y)")));
  std::vector<Vec2> x, y;
  for (int i = 0; i < 10; ++i) {
    x.emplace_back(0.1 * i, 0.05 + 0.09 * i);
    y.emplace_back(0.95 - 0.08 * i, 0.1 * i);
  }
  for (auto _ : state) benchmark::DoNotOptimize(cost_matrix(field, x, y));
}
BENCHMARK(BM_ConformalCostMatrix)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
