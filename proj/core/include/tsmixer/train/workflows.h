// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsmixer/data/series.h"
#include "tsmixer/data/windows.h"
#include "tsmixer/model/checkpoint.h"
#include "tsmixer/model/tsmixer.h"

namespace tsmixer::train {

enum class Mode { kSupervised, kPretrain, kFinetune };

Mode parse_mode(std::string_view name);
std::string_view to_string(Mode mode);

struct TrainPlan {
  Mode mode = Mode::kSupervised;
  // Supervised and pretraining epochs; for finetuning, the epochs that
  // follow the probe phase.
  std::size_t epochs = 100;
  std::size_t probe_epochs = 20;
  std::size_t patience = 10;
  double lr = 1e-3;
  std::size_t batch_size = 8;
  std::vector<std::uint64_t> seeds{42, 43, 44, 45, 46};
  bool lr_plateau = false;
  double plateau_factor = 0.5;
  std::size_t plateau_patience = 3;
  std::size_t window_stride = 1;
  // Stop as soon as an epoch's mean training loss drops below this value.
  std::optional<double> stop_below;
  // Run seeds on separate threads.
  bool parallel_seeds = true;

  void validate() const;
};

// Chronological split, scaler fit on the training rows, and the three
// window sets on the scaled data.
struct PreparedData {
  data::SplitSpec split;
  data::StandardScaler scaler;
  data::WindowSet train;
  data::WindowSet val;
  data::WindowSet test;
};

PreparedData prepare_data(const data::SeriesFrame& frame, data::SplitProfile profile, std::size_t sl, std::size_t fl,
                          std::size_t window_stride = 1);

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
  std::size_t windows = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
  double lr = 0.0;
  bool backbone_frozen = false;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<EpochRecord> curve;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool selected_on_train = false;  // no validation windows: selection fell back to training loss
  bool stopped_early = false;
  // First epoch whose training loss fell below TrainPlan::stop_below.
  std::optional<std::size_t> threshold_epoch;
  std::uint64_t backbone_fingerprint_before = 0;
  std::uint64_t backbone_fingerprint_after_probe = 0;
  Metrics test;
};

// Trains `model` in place. After return the model holds the parameters of
// the best validation epoch. Throws DivergenceError on a non-finite loss.
SeedResult train_supervised(model::ForecastModel& model, const PreparedData& data, const TrainPlan& plan,
                            std::uint64_t seed);

// Linear probing for `plan.probe_epochs` with the backbone frozen, then
// `plan.epochs` of full training.
SeedResult finetune(model::ForecastModel& model, const PreparedData& data, const TrainPlan& plan, std::uint64_t seed);

struct PretrainResult {
  std::uint64_t seed = 0;
  std::vector<EpochRecord> curve;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

// Masked time-series modeling. Model holds the best-val parameters after return.
PretrainResult pretrain_mtsm(model::PretrainModel& model, const PreparedData& data, const TrainPlan& plan,
                             std::uint64_t seed);

// Forecast error over every window and channel. Metrics are on the scaled
// data unless `raw_units` is given, which maps both sides back first.
Metrics evaluate(const model::ForecastModel& model, const data::WindowSet& windows, std::size_t batch_size = 64,
                 const data::StandardScaler* raw_units = nullptr);

// Mean loss of the model's own objective over a window set, in eval mode.
double objective(const model::ForecastModel& model, const data::WindowSet& windows, std::size_t batch_size = 64);

// Runs every seed of the plan. Each seed builds its own model through
// `factory` and its result is stored in seed order.
struct MultiSeedRun {
  std::vector<SeedResult> seeds;
  std::vector<model::ForecastModel> models;
};

using ModelFactory = std::function<model::ForecastModel(std::uint64_t seed)>;

MultiSeedRun run_seeds(const ModelFactory& factory, const PreparedData& data, const TrainPlan& plan);

}  // namespace tsmixer::train
