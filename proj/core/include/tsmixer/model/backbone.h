// Copyright 2026 The TSMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tsmixer/model/config.h"
#include "tsmixer/nn/module.h"

namespace tsmixer::model {

// in -> width -> in with GELU between the linears and dropout after each.
class MlpBlock {
 public:
  MlpBlock() = default;
  MlpBlock(std::size_t in_features, std::size_t width, double dropout, std::mt19937_64& rng);

  nn::Tensor forward(const nn::Tensor& x, const nn::ForwardContext& ctx) const;
  void collect(nn::ParameterSet& out, const std::string& prefix) const;

  nn::Linear& expand() { return expand_; }
  nn::Linear& project() { return project_; }

 private:
  nn::Linear expand_;
  nn::Linear project_;
  double dropout_ = 0.0;
};

// x * softmax(A(x)) over the last axis.
class GatedAttention {
 public:
  GatedAttention() = default;
  GatedAttention(std::size_t features, std::mt19937_64& rng);

  nn::Tensor forward(const nn::Tensor& x) const;
  // The softmax weights alone, for inspection.
  nn::Tensor weights(const nn::Tensor& x) const;
  void collect(nn::ParameterSet& out, const std::string& prefix) const;

  nn::Linear& projection() { return projection_; }

 private:
  nn::Linear projection_;
};

enum class MixAxis { kPatch, kFeature, kChannel };

// One pre-norm residual block mixing along a single axis of the
// b x c x n x hf activation. The axis is moved last, normalized, mixed,
// optionally gated, added back, and the layout is restored.
class MixerBlock {
 public:
  MixerBlock() = default;
  MixerBlock(MixAxis axis, std::size_t axis_len, std::size_t width, double dropout, bool gated,
             std::mt19937_64& rng);

  nn::Tensor forward(const nn::Tensor& x, const nn::ForwardContext& ctx) const;
  void collect(nn::ParameterSet& out, const std::string& prefix) const;

  MixAxis axis() const { return axis_; }
  MlpBlock& mlp() { return mlp_; }
  nn::LayerNorm& norm() { return norm_; }
  std::optional<GatedAttention>& gate() { return gate_; }

 private:
  MixAxis axis_ = MixAxis::kFeature;
  nn::LayerNorm norm_;
  MlpBlock mlp_;
  std::optional<GatedAttention> gate_;
};

// Inter-patch, intra-patch and (IC only) inter-channel blocks, in that order.
class MixerLayer {
 public:
  MixerLayer() = default;
  MixerLayer(const BackboneConfig& config, std::mt19937_64& rng);

  nn::Tensor forward(const nn::Tensor& x, const nn::ForwardContext& ctx) const;
  void collect(nn::ParameterSet& out, const std::string& prefix) const;

  MixerBlock& patch_block() { return patch_; }
  MixerBlock& feature_block() { return feature_; }
  std::optional<MixerBlock>& channel_block() { return channel_; }

 private:
  MixerBlock patch_;
  MixerBlock feature_;
  std::optional<MixerBlock> channel_;
};

// Patch embedding followed by `layers` mixer layers.
class Backbone {
 public:
  Backbone(const BackboneConfig& config, std::mt19937_64& rng);

  // b x c x n x pl -> b x c' x n x hf, where c' = 1 for V.
  nn::Tensor embed(const nn::Tensor& patches) const;
  nn::Tensor forward(const nn::Tensor& patches, const nn::ForwardContext& ctx) const;

  void collect(nn::ParameterSet& out, const std::string& prefix) const;
  nn::ParameterSet parameters() const;
  // Copies share parameter storage; clone() does not.
  Backbone clone() const;

  const BackboneConfig& config() const { return config_; }
  nn::Linear& embedding() { return embed_; }
  std::vector<MixerLayer>& layers() { return layers_; }

 private:
  BackboneConfig config_;
  nn::Linear embed_;
  std::vector<MixerLayer> layers_;
};

}  // namespace tsmixer::model
