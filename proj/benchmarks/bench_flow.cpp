#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "egoexo/flow.hpp"

using namespace egoexo;

namespace {

Frame texture(int size, double shift) {
  Frame f(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = x - shift;
      const auto c = static_cast<std::uint8_t>(128.0 + 60.0 * std::sin(0.3 * u) * std::cos(0.25 * y));
      f.set_rgb(y, x, c, c, c);
    }
  }
  return f;
}

void BM_ComputeFlow(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  const auto a = texture(s, 0.0);
  const auto b = texture(s, 1.5);
  const GradientFlowEstimator est;
  for (auto _ : state) benchmark::DoNotOptimize(est.estimate(a, b));
}
BENCHMARK(BM_ComputeFlow)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_SmoothTemporal(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> g(0.0f, 1.0f);
  FlowSequence seq;
  for (int t = 0; t < 50; ++t) {
    FlowField f(64, 64, t + 1);
    for (auto& v : f.vectors()) v = g(rng);
    seq.flows.push_back(std::move(f));
  }
  const double sigma = static_cast<double>(state.range(0)) / 2.0;
  for (auto _ : state) benchmark::DoNotOptimize(smooth_temporal(seq, sigma));
}
BENCHMARK(BM_SmoothTemporal)->Arg(1)->Arg(3)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
