// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "tsmixer/model/backbone.h"
#include "tsmixer/model/tsmixer.h"
#include "tsmixer/nn/adam.h"
#include "tsmixer/nn/ops.h"
#include "tsmixer/nn/tape.h"

namespace {

using namespace tsmixer;

nn::Tensor filled(nn::Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(nn::numel(shape));
  for (double& x : v) x = dist(rng);
  return nn::Tensor(std::move(shape), std::move(v));
}

model::BackboneConfig default_backbone(model::BackboneType type, bool gated) {
  model::ModelConfig c;
  c.variant.backbone = type;
  c.variant.enhancements.gated = gated;
  return c.backbone();
}

// One mixer layer at the default sizes (b=8, c=7, n=63, hf=32).
void BM_MixerLayerForward(benchmark::State& state) {
  const auto type = static_cast<model::BackboneType>(state.range(0));
  const auto config = default_backbone(type, state.range(1) != 0);
  std::mt19937_64 rng(1);
  const model::MixerLayer layer(config, rng);
  const nn::Tensor x = filled({8, config.mixer_channels(), config.patches, config.hidden}, 2);
  nn::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(layer.forward(x, {}));
}
BENCHMARK(BM_MixerLayerForward)
    ->ArgsProduct({{static_cast<int>(model::BackboneType::kChannelIndependent),
                    static_cast<int>(model::BackboneType::kInterChannel)},
                   {0, 1}})
    ->Unit(benchmark::kMillisecond);

void BM_MixerLayerBackward(benchmark::State& state) {
  const auto config = default_backbone(model::BackboneType::kChannelIndependent, true);
  std::mt19937_64 rng(3);
  const model::MixerLayer layer(config, rng);
  nn::ParameterSet params;
  layer.collect(params, "layer");
  const nn::Tensor x = filled({8, config.mixer_channels(), config.patches, config.hidden}, 4);
  for (auto _ : state) {
    nn::backward(nn::mean(layer.forward(x, {})));
    params.zero_grad();
  }
}
BENCHMARK(BM_MixerLayerBackward)->Unit(benchmark::kMillisecond);

// Forward, backward and Adam update on one batch of 8 default windows.
void BM_TrainStep(benchmark::State& state) {
  model::ModelConfig c;
  c.variant = model::parse_variant(state.range(0) != 0 ? "CI-TSMixer(G,H)" : "CI-TSMixer");
  const model::ForecastModel m(c, 5);
  const nn::ParameterSet params = m.parameters();
  nn::Adam adam(params, {.lr = 1e-3});
  const nn::Tensor x = filled({8, c.sl, c.channels}, 6);
  const nn::Tensor y = filled({8, c.fl, c.channels}, 7);
  std::mt19937_64 rng(8);
  for (auto _ : state) {
    const nn::Tensor loss = m.loss(m.forward(x, {.training = true, .rng = &rng}), y);
    nn::backward(loss);
    adam.step();
    params.zero_grad();
  }
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
