// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tsmixer/model/backbone.h"

#include "tsmixer/error.h"
#include "tsmixer/nn/ops.h"

namespace tsmixer::model {
namespace {

std::mt19937_64& dropout_rng(const nn::ForwardContext& ctx, double p) {
  if (ctx.training && p > 0.0 && ctx.rng == nullptr) throw ConfigError("training with dropout needs an rng");
  static thread_local std::mt19937_64 unused;
  return ctx.rng != nullptr ? *ctx.rng : unused;
}

const char* axis_name(MixAxis axis) {
  switch (axis) {
    case MixAxis::kPatch:
      return "patch";
    case MixAxis::kFeature:
      return "feature";
    case MixAxis::kChannel:
      return "channel";
  }
  return "feature";
}

}  // namespace

MlpBlock::MlpBlock(std::size_t in_features, std::size_t width, double dropout, std::mt19937_64& rng)
    : expand_(in_features, width, rng), project_(width, in_features, rng), dropout_(dropout) {}

nn::Tensor MlpBlock::forward(const nn::Tensor& x, const nn::ForwardContext& ctx) const {
  auto& rng = dropout_rng(ctx, dropout_);
  nn::Tensor h = nn::dropout(nn::gelu(expand_(x)), dropout_, ctx.training, rng);
  return nn::dropout(project_(h), dropout_, ctx.training, rng);
}

void MlpBlock::collect(nn::ParameterSet& out, const std::string& prefix) const {
  expand_.collect(out, prefix + ".fc1");
  project_.collect(out, prefix + ".fc2");
}

GatedAttention::GatedAttention(std::size_t features, std::mt19937_64& rng) : projection_(features, features, rng) {}

nn::Tensor GatedAttention::weights(const nn::Tensor& x) const { return nn::softmax(projection_(x), x.rank() - 1); }

nn::Tensor GatedAttention::forward(const nn::Tensor& x) const { return nn::mul(x, weights(x)); }

void GatedAttention::collect(nn::ParameterSet& out, const std::string& prefix) const {
  projection_.collect(out, prefix + ".proj");
}

MixerBlock::MixerBlock(MixAxis axis, std::size_t axis_len, std::size_t width, double dropout, bool gated,
                       std::mt19937_64& rng)
    : axis_(axis), norm_(axis_len), mlp_(axis_len, width, dropout, rng) {
  if (gated) gate_.emplace(axis_len, rng);
}

nn::Tensor MixerBlock::forward(const nn::Tensor& x, const nn::ForwardContext& ctx) const {
  if (x.rank() != 4) throw ShapeError("mixer block expects b x c x n x hf, got " + nn::to_string(x.shape()));
  nn::Tensor y = x;
  switch (axis_) {
    case MixAxis::kPatch:
      y = nn::permute(x, {0, 1, 3, 2});
      break;
    case MixAxis::kFeature:
      break;
    case MixAxis::kChannel:
      y = nn::permute(x, {0, 2, 3, 1});
      break;
  }
  nn::Tensor h = mlp_.forward(norm_(y), ctx);
  if (gate_) h = gate_->forward(h);
  nn::Tensor out = nn::add(y, h);
  switch (axis_) {
    case MixAxis::kPatch:
      return nn::permute(out, {0, 1, 3, 2});
    case MixAxis::kFeature:
      return out;
    case MixAxis::kChannel:
      return nn::permute(out, {0, 3, 1, 2});
  }
  return out;
}

void MixerBlock::collect(nn::ParameterSet& out, const std::string& prefix) const {
  const std::string base = prefix + "." + axis_name(axis_);
  norm_.collect(out, base + ".norm");
  mlp_.collect(out, base + ".mlp");
  if (gate_) gate_->collect(out, base + ".gate");
}

MixerLayer::MixerLayer(const BackboneConfig& config, std::mt19937_64& rng)
    : patch_(MixAxis::kPatch, config.patches, config.patch_mix_width(), config.dropout, config.gated, rng),
      feature_(MixAxis::kFeature, config.hidden, config.expansion, config.dropout, config.gated, rng) {
  if (config.type == BackboneType::kInterChannel) {
    channel_.emplace(MixAxis::kChannel, config.channels, config.channel_mix_width(), config.dropout, config.gated, rng);
  }
}

nn::Tensor MixerLayer::forward(const nn::Tensor& x, const nn::ForwardContext& ctx) const {
  nn::Tensor y = patch_.forward(x, ctx);
  y = feature_.forward(y, ctx);
  if (channel_) y = channel_->forward(y, ctx);
  return y;
}

void MixerLayer::collect(nn::ParameterSet& out, const std::string& prefix) const {
  patch_.collect(out, prefix);
  feature_.collect(out, prefix);
  if (channel_) channel_->collect(out, prefix);
}

Backbone::Backbone(const BackboneConfig& config, std::mt19937_64& rng)
    : config_(config), embed_(config.embed_in(), config.hidden, rng) {
  validate(config_);
  layers_.reserve(config.layers);
  for (std::size_t i = 0; i < config.layers; ++i) layers_.emplace_back(config_, rng);
}

nn::Tensor Backbone::embed(const nn::Tensor& patches) const {
  // CI weights are channel-agnostic; V and IC are tied to the configured c.
  const bool channel_bound = config_.type != BackboneType::kChannelIndependent;
  if (patches.rank() != 4 || (channel_bound && patches.dim(1) != config_.channels) ||
      patches.dim(2) != config_.patches || patches.dim(3) != config_.patch_len) {
    throw ShapeError("backbone expects b x " + std::string(channel_bound ? std::to_string(config_.channels) : "c") + " x " +
                     std::to_string(config_.patches) + " x " + std::to_string(config_.patch_len) + " patches, got " +
                     nn::to_string(patches.shape()));
  }
  if (config_.type == BackboneType::kVanilla) {
    const std::size_t b = patches.dim(0);
    nn::Tensor flat = nn::reshape(nn::permute(patches, {0, 2, 1, 3}),
                                  nn::Shape{b, 1, config_.patches, config_.channels * config_.patch_len});
    return embed_(flat);
  }
  return embed_(patches);
}

nn::Tensor Backbone::forward(const nn::Tensor& patches, const nn::ForwardContext& ctx) const {
  nn::Tensor x = embed(patches);
  for (const MixerLayer& layer : layers_) x = layer.forward(x, ctx);
  return x;
}

void Backbone::collect(nn::ParameterSet& out, const std::string& prefix) const {
  embed_.collect(out, prefix + ".embed");
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].collect(out, prefix + ".layers." + std::to_string(i));
}

nn::ParameterSet Backbone::parameters() const {
  nn::ParameterSet out;
  collect(out, "backbone");
  return out;
}

Backbone Backbone::clone() const {
  std::mt19937_64 rng(0);
  Backbone copy(config_, rng);
  const nn::ParameterSet from = parameters();
  const nn::ParameterSet to = copy.parameters();
  for (std::size_t i = 0; i < from.items().size(); ++i) {
    nn::Tensor dst = to.items()[i].value;
    std::ranges::copy(from.items()[i].value.data(), dst.mutable_data().begin());
  }
  return copy;
}

}  // namespace tsmixer::model
