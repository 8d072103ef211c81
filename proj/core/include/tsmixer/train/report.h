// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsmixer/data/series.h"
#include "tsmixer/model/config.h"
#include "tsmixer/profile/profiler.h"
#include "tsmixer/train/workflows.h"

namespace tsmixer::train {

inline constexpr int kReportSchemaVersion = 1;

struct Aggregate {
  std::size_t seeds = 0;
  double mse_mean = 0.0;
  double mse_std = 0.0;  // population std over the seeds
  double mae_mean = 0.0;
  double mae_std = 0.0;
};

Aggregate aggregate(std::span<const SeedResult> seeds);

struct RunReport {
  std::string command;
  std::string dataset;
  model::ModelConfig config;
  TrainPlan plan;
  std::optional<data::SplitSpec> split;
  std::optional<data::StandardScaler> scaler;
  std::string loss_tag;
  std::string selection_metric;
  std::vector<SeedResult> seeds;
  Aggregate summary;
  std::optional<profile::CostReport> cost;
};

// Serialized JSON text (schema kReportSchemaVersion).
std::string to_json(const RunReport& report);
std::string to_json(const profile::CostReport& cost);
void write_report(const std::filesystem::path& path, const RunReport& report);

// Reads report files and keeps, for every (dataset, fl), the entry with
// the lowest mean test MSE. Returns JSON text.
std::string best_of(std::span<const std::filesystem::path> reports);

}  // namespace tsmixer::train
