#include <benchmark/benchmark.h>

#include "fbm/harness.hpp"
#include "fbm/kernel.hpp"
#include "fbm/limit.hpp"
#include "fbm/lux3.hpp"
#include "fbm/random.hpp"
#include "fbm/rate_models.hpp"

using namespace fbm;

namespace {

Eigen::MatrixXd symmetric_rates() {
  Eigen::MatrixXd a(3, 3);
  a << -0.5, 0.25, 0.25, 0.25, -0.5, 0.25, 0.25, 0.25, -0.5;
  return a;
}

lux3::Lux3Params symmetric_market() {
  lux3::Lux3Params p;
  p.alpha = {1.0, 1.0, 1.0};
  p.beta = {-1.0, -0.5, -0.5};
  p.delta = {1.0, 1.0, 1.0};
  return p;
}

void BM_Binomial(benchmark::State& state) {
  CounterRng rng(StreamKey{1, 0, 0, 0});
  const auto n = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(sample_binomial(rng, n, 0.3));
}
BENCHMARK(BM_Binomial)->Arg(4)->Arg(100)->Arg(10000)->Arg(1000000);

void BM_StepCounts(benchmark::State& state) {
  const auto N = state.range(0);
  const StochasticMatrix P = build_transition(RateMatrix(symmetric_rates()), 10);
  std::vector<std::int64_t> n{N / 2, N / 4, N - N / 2 - N / 4}, out(3);
  std::uint64_t tick = 0;
  for (auto _ : state) {
    step_counts_into(n, P, StreamKey{1, 0, tick++, 0}, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_StepCounts)->Arg(4)->Arg(1000)->Arg(100000);

void BM_IntegrateLimit(benchmark::State& state) {
  const DriftField d{constant_rate_field(symmetric_rates()), lux3::mechanism(symmetric_market())};
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate_limit(d, {SimplexPoint({1, 0, 0}), 0.0}, 2.0, 1e-3).size());
  }
}
BENCHMARK(BM_IntegrateLimit)->Unit(benchmark::kMillisecond);

void BM_SimulateMarket(benchmark::State& state) {
  Scenario s;
  s.r = 3;
  s.Ns = {state.range(0)};
  s.T = 2.0;
  s.rate = constant_rate_field(symmetric_rates());
  s.use_lux3(symmetric_market());
  s.x0 = {1, 0, 0};
  std::uint64_t rep = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_market(s, state.range(0), rep++).size());
}
BENCHMARK(BM_SimulateMarket)->Arg(100)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
