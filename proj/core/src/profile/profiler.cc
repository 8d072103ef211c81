// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/profile/profiler.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "tsmixer/nn/adam.h"
#include "tsmixer/nn/ops.h"
#include "tsmixer/nn/tape.h"

namespace tsmixer::profile {
namespace {

std::string module_of(const std::string& name) {
  const auto first = name.find('.');
  const std::string head = name.substr(0, first);
  if (head != "backbone" || first == std::string::npos) return head;
  const auto second = name.find('.', first + 1);
  return name.substr(0, second);
}

}  // namespace

ParamCount count_params(const nn::ParameterSet& params) {
  ParamCount out;
  for (const auto& p : params.items()) {
    const std::size_t n = p.value.numel();
    out.total += n;
    const std::string module = module_of(p.name);
    auto it = std::find_if(out.breakdown.begin(), out.breakdown.end(),
                           [&](const ModuleParams& m) { return m.module == module; });
    if (it == out.breakdown.end()) {
      out.breakdown.push_back({module, n});
    } else {
      it->params += n;
    }
  }
  return out;
}

ParamCount count_params(const model::ForecastModel& model) { return count_params(model.parameters()); }

MacCount count_macs(const model::ModelConfig& base, const DatasetShape& shape) {
  model::ModelConfig config = base;
  if (shape.channels != 0) config.channels = shape.channels;
  if (shape.sl != 0) config.sl = shape.sl;
  const model::BackboneConfig bb = config.backbone();
  using U = std::uint64_t;
  const U c = config.channels;
  const U rows = bb.mixer_channels();
  const U n = bb.patches;
  const U hf = bb.hidden;
  const U ef = bb.expansion;
  const U fs = bb.feature_scaler;
  const U pl = config.pl;
  const U fl = config.fl;
  const bool gated = bb.gated;

  MacCount m;
  m.embed = rows * n * bb.embed_in() * hf;

  U layer = 0;
  // Patch mixing: every (row, feature) pair carries a length-n token.
  layer += rows * hf * (2 * n * fs * n + (gated ? n * n : 0));
  // Feature mixing: every (row, patch) pair carries a length-hf token.
  layer += rows * n * (2 * hf * ef + (gated ? hf * hf : 0));
  if (bb.type == model::BackboneType::kInterChannel) {
    layer += n * hf * (2 * c * fs * c + (gated ? c * c : 0));
  }
  m.mixer = layer * bb.layers;

  // One flattened n*hf vector per mixer row, mapped to fl steps of the
  // row's channels (all c of them for the vanilla backbone).
  m.head = rows * n * hf * fl * (c / rows);

  const auto& enh = config.variant.enhancements;
  if (enh.hierarchy) {
    const U op = fl / pl;
    m.reconciliation += c * fl * op + c * op * (pl + 1) * pl;
  }
  if (enh.cross_channel) {
    const U d = c * (2 * config.context_length + 1);
    m.reconciliation += fl * (d * d + d * c);
  }
  m.per_window = m.embed + m.mixer + m.head + m.reconciliation;
  m.per_epoch = m.per_window * shape.windows;
  return m;
}

std::uint64_t measure_macs_per_window(const model::ForecastModel& model) {
  const auto& config = model.config();
  nn::Tensor window(nn::Shape{1, config.sl, config.channels});
  auto values = window.mutable_data();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::sin(0.1 * static_cast<double>(i));
  nn::NoGradGuard guard;
  nn::MacCounter counter;
  model.forward(window, nn::ForwardContext{});
  return counter.count();
}

EpochMeasurement measure_epoch(model::ForecastModel& model, const data::WindowSet& train, std::size_t batch_size,
                               std::size_t timed_epochs, std::uint64_t seed) {
  EpochMeasurement out;
  if (train.empty() || timed_epochs == 0) return out;
  nn::Adam adam(model.parameters());
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const nn::ForwardContext ctx{.training = true, .rng = &rng};

  auto run_epoch = [&] {
    std::shuffle(order.begin(), order.end(), rng);
    for (const auto& group : data::group_batches(order, batch_size)) {
      const data::WindowBatch batch = train.gather(group);
      nn::Tape::current().clear();
      adam.zero_grad();
      nn::Tensor loss = model.loss(model.forward(batch.inputs, ctx), batch.targets);
      nn::backward(loss);
      adam.step();
    }
  };

  run_epoch();
  nn::MemoryStats::reset_peak();
  for (std::size_t e = 0; e < timed_epochs; ++e) {
    const auto start = std::chrono::steady_clock::now();
    run_epoch();
    out.samples.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  out.peak_bytes = nn::MemoryStats::peak_bytes();
  std::vector<double> sorted = out.samples;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  out.epoch_time_sec = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return out;
}

}  // namespace tsmixer::profile
