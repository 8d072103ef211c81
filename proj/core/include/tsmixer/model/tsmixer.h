// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "tsmixer/data/patching.h"
#include "tsmixer/data/revin.h"
#include "tsmixer/model/backbone.h"
#include "tsmixer/model/config.h"
#include "tsmixer/model/heads.h"

namespace tsmixer::model {

struct ForecastOutput {
  nn::Tensor forecast;                    // b x fl x c, same scale as the inputs
  std::optional<nn::Tensor> aggregates;   // b x c x op when the hierarchy head is on
};

// Prediction workflow: RevIN -> patch -> backbone -> prediction head ->
// [hierarchy head] -> [cross-channel head] -> RevIN inverse.
class ForecastModel {
 public:
  ForecastModel(const ModelConfig& config, std::uint64_t seed);
  // Warm start from a copy of `backbone`; heads are freshly initialized.
  ForecastModel(const ModelConfig& config, const Backbone& backbone, std::uint64_t seed);

  ForecastOutput forward(const nn::Tensor& inputs, const nn::ForwardContext& ctx) const;
  // Eq.-2 hierarchy loss when H is enabled, otherwise plain MSE.
  nn::Tensor loss(const ForecastOutput& output, const nn::Tensor& targets) const;
  std::string loss_tag() const;

  nn::ParameterSet parameters() const;
  nn::ParameterSet backbone_parameters() const;
  nn::ParameterSet head_parameters() const;

  const ModelConfig& config() const { return config_; }
  Backbone& backbone() { return backbone_; }
  const Backbone& backbone() const { return backbone_; }
  PredictionHead& head() { return head_; }
  std::optional<HierarchyHead>& hierarchy() { return hierarchy_; }
  std::optional<CrossChannelHead>& cross_channel() { return cross_channel_; }

 private:
  void build_heads(std::mt19937_64& rng);

  ModelConfig config_;
  Backbone backbone_;
  PredictionHead head_;
  std::optional<HierarchyHead> hierarchy_;
  std::optional<CrossChannelHead> cross_channel_;
};

struct PretrainOutput {
  nn::Tensor reconstruction;  // b x sl x c in RevIN space
  nn::Tensor target;          // RevIN-normalized input
  data::PatchBatch masked;    // patches after masking, with the mask
};

// Masked time-series modeling: random patches are zeroed after RevIN and the
// pretrain head reconstructs the full window.
class PretrainModel {
 public:
  PretrainModel(const ModelConfig& config, std::uint64_t seed);

  PretrainOutput forward(const nn::Tensor& inputs, std::uint64_t mask_seed, const nn::ForwardContext& ctx) const;
  nn::Tensor loss(const PretrainOutput& output) const;

  nn::ParameterSet parameters() const;
  const ModelConfig& config() const { return config_; }
  Backbone& backbone() { return backbone_; }
  const Backbone& backbone() const { return backbone_; }
  PretrainHead& head() { return head_; }

 private:
  ModelConfig config_;
  Backbone backbone_;
  PretrainHead head_;
};

}  // namespace tsmixer::model
