// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/model/tsmixer.h"

#include "tsmixer/error.h"
#include "tsmixer/nn/ops.h"

namespace tsmixer::model {
namespace {

std::size_t head_groups(const ModelConfig& config) {
  return config.variant.backbone == BackboneType::kVanilla ? config.channels : 1;
}

Backbone make_backbone(const ModelConfig& config, std::mt19937_64& rng) {
  validate(config);
  return Backbone(config.backbone(), rng);
}

void check_inputs(const nn::Tensor& inputs, const ModelConfig& config) {
  if (inputs.rank() != 3 || inputs.dim(1) != config.sl) {
    throw ShapeError("model expects b x " + std::to_string(config.sl) + " x c inputs, got " +
                     nn::to_string(inputs.shape()));
  }
}

}  // namespace

ForecastModel::ForecastModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config), backbone_([&] {
        std::mt19937_64 rng(seed);
        return make_backbone(config, rng);
      }()) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  build_heads(rng);
}

ForecastModel::ForecastModel(const ModelConfig& config, const Backbone& backbone, std::uint64_t seed)
    : config_(config), backbone_(backbone.clone()) {
  validate(config_);
  const BackboneConfig expected = config_.backbone();
  const BackboneConfig& got = backbone_.config();
  const bool channel_bound = got.type != BackboneType::kChannelIndependent;
  if (got.type != expected.type || got.patch_len != expected.patch_len || got.patches != expected.patches ||
      got.hidden != expected.hidden || got.expansion != expected.expansion || got.layers != expected.layers ||
      got.gated != expected.gated || got.feature_scaler != expected.feature_scaler ||
      (channel_bound && got.channels != expected.channels)) {
    throw ConfigError("backbone checkpoint is incompatible with the requested model configuration");
  }
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  build_heads(rng);
}

void ForecastModel::build_heads(std::mt19937_64& rng) {
  head_ = PredictionHead(config_.patches(), config_.hidden(), config_.fl, head_groups(config_), config_.dropout, rng);
  if (config_.variant.enhancements.hierarchy) hierarchy_.emplace(config_.fl, config_.pl, rng);
  if (config_.variant.enhancements.cross_channel) cross_channel_.emplace(config_.channels, config_.context_length, rng);
}

ForecastOutput ForecastModel::forward(const nn::Tensor& inputs, const nn::ForwardContext& ctx) const {
  check_inputs(inputs, config_);
  auto [normalized, stats] = data::revin_normalize(inputs);
  const data::PatchBatch patches = data::patch(normalized, config_.pl, config_.stride);
  nn::Tensor features = backbone_.forward(patches.patches, ctx);
  nn::Tensor forecast = head_.forward(features, ctx);
  ForecastOutput out;
  if (hierarchy_) {
    HierarchyOutput rec = hierarchy_->forward(forecast);
    forecast = rec.reconciled;
    out.aggregates = data::revin_denormalize_aggregates(rec.aggregates, stats, config_.pl);
  }
  if (cross_channel_) forecast = cross_channel_->forward(forecast);
  out.forecast = data::revin_denormalize(forecast, stats);
  return out;
}

nn::Tensor ForecastModel::loss(const ForecastOutput& output, const nn::Tensor& targets) const {
  if (hierarchy_) {
    if (!output.aggregates) throw ConfigError("hierarchy loss needs patch aggregates");
    return hier_loss(targets, output.forecast, *output.aggregates, config_.pl);
  }
  return nn::mse(output.forecast, targets);
}

std::string ForecastModel::loss_tag() const { return hierarchy_ ? "hier" : "mse"; }

nn::ParameterSet ForecastModel::parameters() const {
  nn::ParameterSet out = backbone_parameters();
  out.extend(head_parameters());
  return out;
}

nn::ParameterSet ForecastModel::backbone_parameters() const { return backbone_.parameters(); }

nn::ParameterSet ForecastModel::head_parameters() const {
  nn::ParameterSet out;
  head_.collect(out, "head");
  if (hierarchy_) hierarchy_->collect(out, "hier");
  if (cross_channel_) cross_channel_->collect(out, "cc");
  return out;
}

PretrainModel::PretrainModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config), backbone_([&] {
        std::mt19937_64 rng(seed);
        return make_backbone(config, rng);
      }()) {
  if (config_.stride != config_.pl) {
    throw ConfigError("masked pretraining needs stride == pl (got s=" + std::to_string(config_.stride) +
                      ", pl=" + std::to_string(config_.pl) + ")");
  }
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  head_ = PretrainHead(config_.patches(), config_.hidden(), config_.sl, head_groups(config_), config_.dropout, rng);
}

PretrainOutput PretrainModel::forward(const nn::Tensor& inputs, std::uint64_t mask_seed,
                                      const nn::ForwardContext& ctx) const {
  check_inputs(inputs, config_);
  auto [normalized, stats] = data::revin_normalize(inputs);
  data::PatchBatch masked = data::mask_patches(data::patch(normalized, config_.pl, config_.stride),
                                               config_.mask_ratio, mask_seed);
  nn::Tensor features = backbone_.forward(masked.patches, ctx);
  nn::Tensor reconstruction = head_.forward(features, ctx);
  return {reconstruction, normalized, std::move(masked)};
}

nn::Tensor PretrainModel::loss(const PretrainOutput& output) const {
  return masked_mse(output.target, output.reconstruction, output.masked.mask, config_.pl);
}

nn::ParameterSet PretrainModel::parameters() const {
  nn::ParameterSet out = backbone_.parameters();
  head_.collect(out, "pretrain_head");
  return out;
}

}  // namespace tsmixer::model
