// Serial reference vs OpenMP paths of the sweep kernels.

#include <benchmark/benchmark.h>

#include "stickysim/sweep.hpp"

namespace {

using stickysim::SimConfig;
using stickysim::SystemParams;
using stickysim::Threshold;
using stickysim::sweep::Execution;

std::vector<int> h_grid() {
  std::vector<int> hs;
  for (int h = 1; h <= 200; ++h) hs.push_back(h);
  return hs;
}

void BM_ConsistencyGrid(benchmark::State& state) {
  const auto exec = static_cast<Execution>(state.range(0));
  const auto hs = h_grid();
  const std::vector<double> chis = {1.0, 10.0, 100.0, 200.0};
  const SystemParams params;
  for (auto _ : state) {
    auto cells = stickysim::sweep::shedding_consistency_grid(hs, chis, params, exec);
    benchmark::DoNotOptimize(cells.data());
  }
  state.SetLabel(exec == Execution::Serial ? "serial" : "parallel");
}
BENCHMARK(BM_ConsistencyGrid)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PullResidualGrid(benchmark::State& state) {
  const auto exec = static_cast<Execution>(state.range(0));
  std::vector<stickysim::sweep::PullGridPoint> points;
  for (int k = 0; k < 64; ++k) {
    const int l = 20 + k;
    points.push_back({40.0 + k, l, Threshold::finite(l + 30)});
  }
  for (auto _ : state) {
    auto out = stickysim::sweep::pull_residual_grid(points, exec);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetLabel(exec == Execution::Serial ? "serial" : "parallel");
}
BENCHMARK(BM_PullResidualGrid)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ReplicatedFlowSims(benchmark::State& state) {
  const auto exec = static_cast<Execution>(state.range(0));
  std::vector<SimConfig> configs(4);
  for (std::size_t k = 0; k < configs.size(); ++k) {
    configs[k].params.n = 50;
    configs[k].params.lambda = 10.0;
    configs[k].scheme = stickysim::scheme::PullBased{12, Threshold::finite(18)};
    configs[k].seed = k + 1;
    configs[k].horizon = 30.0;
    configs[k].warmup = 5.0;
    configs[k].record_series = false;
  }
  for (auto _ : state) {
    auto stats = stickysim::sweep::run_flow_sims(configs, exec);
    benchmark::DoNotOptimize(stats.data());
  }
  state.SetLabel(exec == Execution::Serial ? "serial" : "parallel");
}
BENCHMARK(BM_ReplicatedFlowSims)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
