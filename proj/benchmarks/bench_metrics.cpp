#include <benchmark/benchmark.h>

#include <random>

#include "egoexo/metrics.hpp"

using namespace egoexo;

namespace {

Frame noise(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Frame f(size, size);
  for (auto& v : f.pixels()) v = static_cast<std::uint8_t>(rng() % 256);
  return f;
}

void BM_Ssim(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  const auto a = noise(s, 1);
  const auto b = noise(s, 2);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::ssim(a, b));
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(128)->Arg(256);

void BM_Psnr(benchmark::State& state) {
  const auto a = noise(128, 1);
  const auto b = noise(128, 2);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::psnr(a, b));
}
BENCHMARK(BM_Psnr);

void BM_SharpnessDifference(benchmark::State& state) {
  const auto a = noise(128, 1);
  const auto b = noise(128, 2);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::sharpness_difference(a, b));
}
BENCHMARK(BM_SharpnessDifference);

void BM_CmcFromRanks(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  std::vector<int> ranks(n);
  for (auto& r : ranks) r = 1 + static_cast<int>(rng() % n);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::cmc_from_ranks(ranks, n));
}
BENCHMARK(BM_CmcFromRanks)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
