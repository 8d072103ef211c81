// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "tsmixer/model/config.h"
#include "tsmixer/model/tsmixer.h"
#include "tsmixer/nn/module.h"

namespace tsmixer::model {

// On disk a checkpoint is two files sharing a stem:
//   <stem>.json  manifest: format/version, kind, model and backbone config,
//                enhancement flags, and one {name, shape, offset, count}
//                record per tensor;
//   <stem>.bin   every tensor's row-major values as little-endian float32,
//                concatenated in manifest order.
enum class CheckpointKind { kBackbone, kForecast };

struct StoredTensor {
  std::string name;
  nn::Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  CheckpointKind kind = CheckpointKind::kForecast;
  ModelConfig config;
  std::vector<StoredTensor> tensors;

  std::size_t total_elements() const;
};

void write_checkpoint(const std::filesystem::path& stem, CheckpointKind kind, const ModelConfig& config,
                      const nn::ParameterSet& params);
Checkpoint read_checkpoint(const std::filesystem::path& stem);

// Copies stored values into `params` by name. Every parameter must be
// present with a matching shape.
void load_parameters(const Checkpoint& checkpoint, const nn::ParameterSet& params);

// Backbone-only checkpoint; any head is left out.
void save_backbone(const std::filesystem::path& stem, const Backbone& backbone, const ModelConfig& config);
Backbone load_backbone(const Checkpoint& checkpoint);

void save_forecast_model(const std::filesystem::path& stem, const ForecastModel& model);
ForecastModel load_forecast_model(const std::filesystem::path& stem);

}  // namespace tsmixer::model
