// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "tsmixer/nn/ops.h"
#include "tsmixer/nn/tape.h"

namespace {

using namespace tsmixer;

nn::Tensor filled(nn::Shape shape, std::uint64_t seed, bool requires_grad = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(nn::numel(shape));
  for (double& x : v) x = dist(rng);
  return nn::Tensor(std::move(shape), std::move(v), requires_grad);
}

// Token rows times an in x out weight, the shape of every mixer linear.
void BM_Matmul(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  const nn::Tensor x = filled({rows, in}, 1);
  const nn::Tensor w = filled({in, out}, 2);
  nn::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(nn::matmul(x, w));
  state.counters["MACs/s"] =
      benchmark::Counter(static_cast<double>(rows * in * out), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Matmul)->Args({8 * 7 * 32, 63, 126})->Args({8 * 7 * 63, 32, 64})->Args({8 * 7, 2016, 96});

void BM_MatmulBackward(benchmark::State& state) {
  const nn::Tensor x = filled({8 * 7 * 63, 32}, 3, true);
  const nn::Tensor w = filled({32, 64}, 4, true);
  for (auto _ : state) {
    nn::backward(nn::sum(nn::matmul(x, w)));
    nn::Tensor(x).zero_grad();
    nn::Tensor(w).zero_grad();
  }
}
BENCHMARK(BM_MatmulBackward);

void BM_Softmax(benchmark::State& state) {
  const nn::Tensor x = filled({8 * 7 * 63, 32}, 5);
  nn::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(nn::softmax(x, 1));
}
BENCHMARK(BM_Softmax);

void BM_LayerNorm(benchmark::State& state) {
  const nn::Tensor x = filled({8 * 7 * 32, 63}, 6);
  nn::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(nn::layernorm(x, 1e-5));
}
BENCHMARK(BM_LayerNorm);

}  // namespace

BENCHMARK_MAIN();
