#include <benchmark/benchmark.h>

#include <random>

#include "egoexo/nn/layers.hpp"
#include "egoexo/synthesis.hpp"

using namespace egoexo;

namespace {

nn::Tensor<float> random_input(int n, int c, int s) {
  std::mt19937_64 rng(1);
  std::normal_distribution<float> g(0.0f, 1.0f);
  nn::Tensor<float> x(n, c, s, s);
  for (auto& v : x.values()) v = g(rng);
  return x;
}

// Args: channels in/out, spatial size. Stride-2 4x4 as in the generator encoder.
void BM_Conv2dForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int s = static_cast<int>(state.range(1));
  std::mt19937_64 rng(2);
  nn::Conv2d<float> conv("c", c, c, 4, 2, 1, rng);
  const auto x = random_input(1, c, s);
  for (auto _ : state) benchmark::DoNotOptimize(conv.infer(x));
  state.SetItemsProcessed(state.iterations() * (s / 2) * (s / 2) * c * c * 16);
}
BENCHMARK(BM_Conv2dForward)->Args({16, 64})->Args({32, 32})->Args({64, 16});

void BM_Conv2dBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int s = static_cast<int>(state.range(1));
  std::mt19937_64 rng(2);
  nn::Conv2d<float> conv("c", c, c, 4, 2, 1, rng);
  const auto x = random_input(1, c, s);
  const auto y = conv.forward(x);
  const nn::Tensor<float> dy(y.n(), y.c(), y.h(), y.w(), 1.0f);
  for (auto _ : state) benchmark::DoNotOptimize(conv.backward(dy));
}
BENCHMARK(BM_Conv2dBackward)->Args({16, 64})->Args({32, 32});

void BM_GeneratorInfer(benchmark::State& state) {
  synthesis::GeneratorConfig cfg;
  cfg.image_size = static_cast<int>(state.range(0));
  cfg.depth = 5;
  cfg.base_width = 16;
  const synthesis::Generator<float> g(cfg);
  const auto x = random_input(1, 3, cfg.image_size);
  for (auto _ : state) benchmark::DoNotOptimize(g.infer(x));
}
BENCHMARK(BM_GeneratorInfer)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
