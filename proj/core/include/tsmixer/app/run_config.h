// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>

#include "tsmixer/data/series.h"
#include "tsmixer/model/config.h"
#include "tsmixer/train/workflows.h"

namespace tsmixer::app {

// Everything a CLI run needs. The file format is INI with [data], [model],
// [train] and [output] sections; every key is optional and defaults to the
// long-horizon benchmark setup.
//
//   [data]   path, date_column, split (ett_hourly | ett_minutely | ratio),
//            name, window_stride
//   [model]  variant, sl, pl, stride, fl, nl, fs, hf, ef, dropout,
//            context_length, mask_ratio
//   [train]  epochs, probe_epochs, patience, lr, batch_size, seeds,
//            lr_plateau, plateau_factor, plateau_patience, parallel_seeds
//   [output] dir
struct RunConfig {
  std::filesystem::path dataset;
  std::string dataset_name;  // defaults to the file stem
  bool date_column = true;
  data::SplitProfile split = data::SplitProfile::kRatio;
  model::ModelConfig model;
  train::TrainPlan plan;
  std::filesystem::path output_dir = "runs";
};

// `overrides` hold "section.key=value" entries applied after the file.
// Unknown sections, unknown keys and malformed values raise ConfigError.
RunConfig parse_run_config(std::istream& in, std::span<const std::string> overrides = {});
RunConfig load_run_config(const std::optional<std::filesystem::path>& path, std::span<const std::string> overrides = {});

}  // namespace tsmixer::app
