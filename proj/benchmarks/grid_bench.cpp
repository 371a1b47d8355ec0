#include <benchmark/benchmark.h>

#include "curvlab/curvature.hpp"
#include "curvlab/expr.hpp"
#include "curvlab/grid.hpp"
#include "curvlab/metric.hpp"

namespace {

using namespace curvlab;

const char* kU = "0.05*sin(2*pi*x)*sin(2*pi*y)";

void BM_Convolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const PeriodicGridField f = parse_field(kU).sample(n);
  const Kernel k = Kernel::bump(1.0 / 32, n);
  for (auto _ : state) benchmark::DoNotOptimize(convolve(f, k));
}
BENCHMARK(BM_Convolve)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SmoothAndCurvature(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const MetricModel m = MetricModel::conformal(parse_field(kU), Regularity::kSmooth).sampled(n);
  for (auto _ : state) benchmark::DoNotOptimize(riemann_ricci(smooth(m, 1.0 / 64)));
}
BENCHMARK(BM_SmoothAndCurvature)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
