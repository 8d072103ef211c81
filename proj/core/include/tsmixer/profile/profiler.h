// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsmixer/model/config.h"
#include "tsmixer/model/tsmixer.h"
#include "tsmixer/nn/module.h"
#include "tsmixer/train/workflows.h"

namespace tsmixer::profile {

// Printed in every cost report.
inline constexpr std::string_view kMacConvention =
    "forward pass only; a linear map in->out applied to T rows counts T*in*out MACs; "
    "normalization, softmax and elementwise ops are excluded";

struct ModuleParams {
  std::string module;
  std::size_t params = 0;
};

struct ParamCount {
  std::size_t total = 0;
  std::vector<ModuleParams> breakdown;  // in first-seen order
};

// Groups by the first name component, with the backbone split into its
// embedding and mixer layers.
ParamCount count_params(const nn::ParameterSet& params);
ParamCount count_params(const model::ForecastModel& model);

struct DatasetShape {
  std::size_t windows = 0;   // windows per epoch
  std::size_t channels = 0;  // c of the data; 0 keeps the config's value
  std::size_t sl = 0;        // 0 keeps the config's value
};

struct MacCount {
  std::uint64_t per_window = 0;
  std::uint64_t per_epoch = 0;
  std::uint64_t embed = 0;
  std::uint64_t mixer = 0;
  std::uint64_t head = 0;
  std::uint64_t reconciliation = 0;
};

// Analytic forward MACs of the forecasting model.
MacCount count_macs(const model::ModelConfig& config, const DatasetShape& shape);
// Forward MACs measured by running one window through `model`.
std::uint64_t measure_macs_per_window(const model::ForecastModel& model);

struct EpochMeasurement {
  double epoch_time_sec = 0.0;  // median of the timed epochs
  std::vector<double> samples;
  std::size_t peak_bytes = 0;
};

// Trains `model` for one warm-up epoch plus `timed_epochs` epochs on the
// training windows and reports the median epoch time and the tensor
// allocator's peak footprint. Must not share the process with other
// training threads.
EpochMeasurement measure_epoch(model::ForecastModel& model, const data::WindowSet& train, std::size_t batch_size,
                               std::size_t timed_epochs = 3, std::uint64_t seed = 0);

struct CostReport {
  ParamCount params;
  MacCount macs;
  std::uint64_t measured_macs_per_window = 0;
  std::optional<EpochMeasurement> epoch;
};

}  // namespace tsmixer::profile
