// Serial reference vs OpenMP paths: multi-start simultaneous optimization and
// the stochastic rollout ensemble.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include <benchmark/benchmark.h>

#include "flexprice/ff_core.hpp"
#include "flexprice/price_opt.hpp"

using namespace flexprice;

namespace {

price::PriceProblem day_problem(std::size_t hours) {
  price::PriceProblem p;
  p.params.capacity = 8.0;
  p.params.sensitivity = 7.5;
  p.params.ref_price = 0.3;
  p.x0.x = 0.4;
  p.cost_kind = price::CostKind::quadratic;
  for (std::size_t t = 0; t < hours; ++t) {
    const double h = static_cast<double>(t);
    p.baseline.push_back(1.0 + 0.2 * std::sin(2 * std::numbers::pi * h / 24));
    p.demand_ref.push_back(1.0 + 0.8 * std::sin(2 * std::numbers::pi * (h - 18) / 24));
  }
  return p;
}

void simultaneous(benchmark::State& state, Execution exec) {
  const auto p = day_problem(24);
  price::OptConfig cfg;
  cfg.n_starts = static_cast<std::size_t>(state.range(0));
  cfg.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(price::simultaneous_optimize(p, cfg, exec));
}

void ensemble(benchmark::State& state, Execution exec) {
  const auto p = day_problem(120);
  ff::FlexParams fp = p.params;
  fp.noise_sigma = 0.05;
  const std::vector<double> prices(120, 0.35);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(state.range(0)));
  std::iota(seeds.begin(), seeds.end(), 0);
  for (auto _ : state)
    benchmark::DoNotOptimize(ff::rollout_ensemble(p.x0, prices, p.baseline, fp, seeds, exec));
}

}  // namespace

BENCHMARK_CAPTURE(simultaneous, serial, Execution::serial)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(simultaneous, parallel, Execution::parallel)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(ensemble, serial, Execution::serial)->Arg(256)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(ensemble, parallel, Execution::parallel)->Arg(256)->Arg(4096)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
